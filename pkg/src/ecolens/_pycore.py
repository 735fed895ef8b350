"""Pure-Python novelty kernel. Same contract as the compiled ``_core``."""

import numpy as np


def detect_first_occurrences(offsets, libs, eligible, want_pairs=True):
    """Scan integer-encoded events in order and report first occurrences.

    ``libs[offsets[i]:offsets[i+1]]`` holds event i's library ids, sorted
    ascending and unique. ``eligible`` is a uint8 mask over library ids.

    Returns five int arrays: (simple_event, simple_lib, pair_event,
    pair_a, pair_b), each in emission order; pair_a < pair_b.
    """
    offsets = np.asarray(offsets, dtype=np.int64).tolist()
    libs = np.asarray(libs, dtype=np.int32).tolist()
    elig = np.asarray(eligible, dtype=np.uint8).tolist()

    seen = [False] * len(elig)
    seen_pairs = set()
    s_ev, s_lib, p_ev, p_a, p_b = [], [], [], [], []

    for i in range(len(offsets) - 1):
        cur = [x for x in libs[offsets[i]:offsets[i + 1]] if elig[x]]
        for x in cur:
            if not seen[x]:
                seen[x] = True
                s_ev.append(i)
                s_lib.append(x)
        if want_pairs:
            k = len(cur)
            for a in range(k):
                la = cur[a]
                for b in range(a + 1, k):
                    key = (la, cur[b])
                    if key not in seen_pairs:
                        seen_pairs.add(key)
                        p_ev.append(i)
                        p_a.append(la)
                        p_b.append(cur[b])

    return (
        np.array(s_ev, dtype=np.int64),
        np.array(s_lib, dtype=np.int32),
        np.array(p_ev, dtype=np.int64),
        np.array(p_a, dtype=np.int32),
        np.array(p_b, dtype=np.int32),
    )
