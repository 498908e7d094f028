// Per-item feedback marks. An item carries at most one mark, so like and
// dislike can never be set together; clicking the active mark clears it.

export type Mark = "like" | "dislike";

export type Phase = "idle" | "searching" | "retrieved" | "submitting" | "updated";

export function toggleMark(marks: Map<number, Mark>, id: number, mark: Mark): Map<number, Mark> {
    const next = new Map(marks);
    if (next.get(id) === mark) {
        next.delete(id);
    } else {
        next.set(id, mark);
    }
    return next;
}

export function markedIds(marks: Map<number, Mark>, mark: Mark): number[] {
    const ids: number[] = [];
    for (const [id, m] of marks) {
        if (m === mark) {
            ids.push(id);
        }
    }
    return ids.sort((a, b) => a - b);
}

/** Feedback is a single round: only a retrieved session with at least one
    mark can submit, and never while a request is already in flight. */
export function canSubmit(phase: Phase, marks: Map<number, Mark>): boolean {
    return phase === "retrieved" && marks.size > 0;
}
