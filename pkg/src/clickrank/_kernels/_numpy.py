"""Pure numpy scoring kernels.

Reference implementation and import-time fallback for the compiled
extension.  All kernels accumulate in float64 and round once to float32,
matching the native code, so the two backends agree to the last float32
ulp on everything but astronomically unlikely rounding-boundary inputs.
"""

import numpy as np


def dot_scores(mat: np.ndarray, query: np.ndarray) -> np.ndarray:
    """score[i] = <mat[i], query>, float64 accumulation, float32 result."""
    return (mat.astype(np.float64) @ query.astype(np.float64)).astype(np.float32)


def group_mean_scores(mat: np.ndarray, group: np.ndarray) -> np.ndarray:
    """score[i] = mean over group rows g of <mat[i], g>."""
    if group.shape[0] == 0:
        raise ValueError("group is empty")
    sims = mat.astype(np.float64) @ group.astype(np.float64).T
    return sims.mean(axis=1).astype(np.float32)


def feedback_scores(
    cross: np.ndarray,
    query: np.ndarray,
    uni: np.ndarray,
    like: np.ndarray,
    dislike: np.ndarray,
    lambda_p: float,
    lambda_n: float,
) -> np.ndarray:
    """Fused query + feedback scoring over all items.

    score[i] = <cross[i], query>
               + lambda_p * mean_g <uni[i], like[g]>
               - lambda_n * mean_g <uni[i], dislike[g]>

    An empty like/dislike matrix contributes exactly 0.
    """
    total = cross.astype(np.float64) @ query.astype(np.float64)
    uni64 = None
    if like.shape[0] > 0:
        uni64 = uni.astype(np.float64)
        total = total + lambda_p * (uni64 @ like.astype(np.float64).T).mean(axis=1)
    if dislike.shape[0] > 0:
        if uni64 is None:
            uni64 = uni.astype(np.float64)
        total = total - lambda_n * (uni64 @ dislike.astype(np.float64).T).mean(axis=1)
    return total.astype(np.float32)
