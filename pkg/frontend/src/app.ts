// Single-view app mirroring the service's session lifecycle: one query,
// one round of like/dislike feedback, one re-ranked grid. Every rank and
// score shown here is taken verbatim from a service payload.

import { ApiClient, ApiError, ResultEntry, SessionPayload } from "./api";
import { Mark, Phase, canSubmit, markedIds, toggleMark } from "./marks";
import { tileBackground } from "./tiles";

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className = "",
    text = "",
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) {
        node.className = className;
    }
    if (text) {
        node.textContent = text;
    }
    return node;
}

export function createApp(root: HTMLElement, api: ApiClient): void {
    let phase: Phase = "idle";
    let session: SessionPayload | null = null;
    let marks = new Map<number, Mark>();
    let demoTarget: number | null = null;

    root.textContent = "";
    root.classList.add("app");

    const form = el("form", "search-form");
    form.id = "search-form";
    const queryInput = el("input", "query-input");
    queryInput.id = "query-input";
    queryInput.name = "query";
    queryInput.type = "text";
    queryInput.placeholder = "describe what you are looking for";
    queryInput.autocomplete = "off";
    const demoLabel = el("label", "demo-label", "demo target ");
    const demoInput = el("input", "demo-input");
    demoInput.id = "demo-input";
    demoInput.name = "demo-target";
    demoInput.type = "number";
    demoInput.min = "0";
    demoInput.placeholder = "item id";
    demoLabel.appendChild(demoInput);
    const searchButton = el("button", "search-button", "Search");
    searchButton.id = "search-button";
    searchButton.type = "submit";
    form.append(queryInput, demoLabel, searchButton);

    const status = el("p", "status");
    status.id = "status";
    status.setAttribute("role", "status");

    const banner = el("div", "demo-banner hidden");
    banner.id = "demo-banner";

    const grid = el("ol", "results-grid");
    grid.id = "results-grid";

    const submitButton = el("button", "submit-button", "Send feedback");
    submitButton.id = "submit-button";
    submitButton.type = "button";
    submitButton.disabled = true;

    root.append(form, status, banner, grid, submitButton);

    function setPhase(next: Phase): void {
        phase = next;
        root.dataset.phase = next;
        const busy = next === "searching" || next === "submitting";
        searchButton.disabled = busy;
        submitButton.disabled = busy || !canSubmit(next, marks);
    }

    function setStatus(text: string, isError = false): void {
        status.textContent = text;
        status.classList.toggle("error", isError);
    }

    function describe(err: unknown): string {
        if (err instanceof ApiError) {
            return `${err.message} (HTTP ${err.status})`;
        }
        return err instanceof Error ? err.message : String(err);
    }

    function renderBanner(): void {
        const before = session?.demo_target_rank_before;
        if (demoTarget === null || before === undefined) {
            banner.classList.add("hidden");
            banner.textContent = "";
            delete banner.dataset.rankBefore;
            delete banner.dataset.rankAfter;
            return;
        }
        banner.classList.remove("hidden");
        banner.dataset.rankBefore = String(before);
        const after = session?.demo_target_rank_after;
        if (after === undefined) {
            delete banner.dataset.rankAfter;
            banner.textContent = `target item ${demoTarget}: rank ${before} before feedback`;
        } else {
            banner.dataset.rankAfter = String(after);
            banner.textContent = `target item ${demoTarget}: rank ${before} → rank ${after} after feedback`;
        }
    }

    function thumbFor(entry: ResultEntry): HTMLElement {
        if (entry.image_uri) {
            const img = el("img", "thumb");
            img.src = entry.image_uri;
            img.alt = entry.text;
            return img;
        }
        const tile = el("div", "thumb tile");
        tile.style.background = tileBackground(entry.attributes);
        tile.appendChild(el("span", "tile-text", entry.text));
        return tile;
    }

    function markButton(entry: ResultEntry, mark: Mark, interactive: boolean): HTMLButtonElement {
        const button = el("button", `mark-button ${mark}`, mark === "like" ? "Like" : "Dislike");
        button.type = "button";
        button.disabled = !interactive;
        const active = marks.get(entry.id) === mark;
        button.setAttribute("aria-pressed", String(active));
        button.classList.toggle("active", active);
        button.addEventListener("click", () => {
            if (phase !== "retrieved") {
                return;
            }
            marks = toggleMark(marks, entry.id, mark);
            renderGrid(session?.results ?? [], true);
            setPhase(phase);
        });
        return button;
    }

    function renderGrid(entries: ResultEntry[], interactive: boolean): void {
        grid.textContent = "";
        for (const entry of entries) {
            const card = el("li", "card");
            card.dataset.id = String(entry.id);
            card.dataset.rank = String(entry.rank);
            const mark = marks.get(entry.id);
            if (mark) {
                card.classList.add(`marked-${mark}`);
            }
            card.appendChild(thumbFor(entry));
            card.appendChild(el("span", "rank-badge", `#${entry.rank}`));
            const body = el("div", "card-body");
            body.appendChild(el("p", "item-text", entry.text));
            body.appendChild(el("p", "item-attrs", entry.attributes.join(", ")));
            body.appendChild(el("p", "item-score", `score ${entry.score.toFixed(4)}`));
            const buttons = el("div", "mark-buttons");
            buttons.appendChild(markButton(entry, "like", interactive));
            buttons.appendChild(markButton(entry, "dislike", interactive));
            body.appendChild(buttons);
            card.appendChild(body);
            grid.appendChild(card);
        }
    }

    async function runSearch(): Promise<void> {
        const query = queryInput.value.trim();
        if (!query || phase === "searching" || phase === "submitting") {
            return;
        }
        const demoRaw = demoInput.value.trim();
        demoTarget = demoRaw === "" ? null : Number(demoRaw);
        session = null;
        marks = new Map();
        renderGrid([], false);
        renderBanner();
        setPhase("searching");
        setStatus("searching…");
        try {
            session = await api.createSession(
                demoTarget === null ? { query } : { query, demo_target: demoTarget },
            );
        } catch (err) {
            setPhase("idle");
            setStatus(describe(err), true);
            return;
        }
        root.dataset.sessionId = session.session_id;
        setPhase("retrieved");
        setStatus(`${session.results.length} results; mark likes and dislikes, then send feedback`);
        renderGrid(session.results, true);
        renderBanner();
    }

    async function runSubmit(): Promise<void> {
        if (!session || !canSubmit(phase, marks)) {
            return;
        }
        const sid = session.session_id;
        const likes = markedIds(marks, "like");
        const dislikes = markedIds(marks, "dislike");
        setPhase("submitting");
        setStatus("applying feedback…");
        try {
            session = await api.submitFeedback(sid, likes, dislikes);
        } catch (err) {
            if (err instanceof ApiError && err.status === 409) {
                setPhase("updated");
                setStatus(`feedback was already submitted for this session (${describe(err)})`, true);
            } else {
                setPhase("retrieved");
                setStatus(describe(err), true);
            }
            return;
        }
        setPhase("updated");
        setStatus("feedback applied; search again to start a new session");
        renderGrid(session.results, false);
        renderBanner();
    }

    form.addEventListener("submit", event => {
        event.preventDefault();
        void runSearch();
    });
    submitButton.addEventListener("click", () => {
        void runSubmit();
    });

    setPhase("idle");
    setStatus("enter a query to begin");
}
