// Typed client for the session API. Everything displayed in the UI comes
// out of these payloads; the client never re-derives ranks or scores.

export interface ResultEntry {
    id: number;
    text: string;
    attributes: string[];
    image_uri: string | null;
    score: number;
    rank: number;
}

export interface SessionPayload {
    session_id: string;
    state: "RETRIEVED" | "UPDATED";
    results: ResultEntry[];
    demo_target_rank_before?: number;
    demo_target_rank_after?: number;
}

export interface SessionViewPayload {
    session_id: string;
    query: string;
    state: "RETRIEVED" | "UPDATED";
    k: number;
    shown_candidates: ResultEntry[];
    results: ResultEntry[];
    demo_target?: number;
    demo_target_rank_before?: number;
    demo_target_rank_after?: number | null;
}

export interface HealthPayload {
    status: string;
    n_items: number;
    dim: number;
    kernel_backend: string;
}

export interface ItemPayload {
    id: number;
    text: string;
    attributes: string[];
    image_uri: string | null;
}

export interface CreateSessionRequest {
    query: string;
    k?: number;
    demo_target?: number;
}

/** The service reports errors as {"detail": ...} where detail is a plain
    string from our handlers or a list of objects from body validation. */
function detailText(detail: unknown): string {
    if (typeof detail === "string") {
        return detail;
    }
    if (Array.isArray(detail)) {
        const parts = detail
            .map(entry => (entry && typeof entry.msg === "string" ? entry.msg : JSON.stringify(entry)))
            .filter(part => part.length > 0);
        if (parts.length > 0) {
            return parts.join("; ");
        }
    }
    return JSON.stringify(detail);
}

export class ApiError extends Error {
    constructor(readonly status: number, readonly detail: unknown) {
        super(detailText(detail));
        this.name = "ApiError";
    }
}

/** Structural interface so tests can substitute a scripted client. */
export interface ApiClient {
    createSession(body: CreateSessionRequest): Promise<SessionPayload>;
    submitFeedback(sessionId: string, likes: number[], dislikes: number[]): Promise<SessionPayload>;
    getSession(sessionId: string): Promise<SessionViewPayload>;
}

export class Api implements ApiClient {
    constructor(private readonly baseUrl = "") {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const res = await fetch(this.baseUrl + path, init);
        if (!res.ok) {
            let detail: unknown = res.statusText;
            try {
                detail = (await res.json()).detail;
            } catch {
                // non-JSON error body; keep the status text
            }
            throw new ApiError(res.status, detail);
        }
        return res.json() as Promise<T>;
    }

    private post<T>(path: string, body: unknown): Promise<T> {
        return this.request<T>(path, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
    }

    health(): Promise<HealthPayload> {
        return this.request<HealthPayload>("/v1/health");
    }

    getItem(id: number): Promise<ItemPayload> {
        return this.request<ItemPayload>(`/v1/items/${id}`);
    }

    createSession(body: CreateSessionRequest): Promise<SessionPayload> {
        return this.post<SessionPayload>("/v1/sessions", body);
    }

    submitFeedback(sessionId: string, likes: number[], dislikes: number[]): Promise<SessionPayload> {
        return this.post<SessionPayload>(`/v1/sessions/${sessionId}/feedback`, { likes, dislikes });
    }

    getSession(sessionId: string): Promise<SessionViewPayload> {
        return this.request<SessionViewPayload>(`/v1/sessions/${sessionId}`);
    }
}
