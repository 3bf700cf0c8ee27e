"""A deliberately plain saturated CSMA/CA slot simulator, used only as a test oracle.

Written from the textbook description without touching the package: every
station counts down a uniform backoff; a slot where nobody expires is idle,
one expiry is a success, two or more a collision. Binary exponential backoff
with stage cap, retry without limit.
"""

import random


def simulate(n, slots, cw_min=16, max_stage=5, seed=1, slot_us=9.0, busy_us=None):
    if busy_us is None:
        # 1000-byte frame at 54 Mb/s with a 6 Mb/s PHY header, then SIFS, ACK, DIFS
        frame = 128 / 6 + 8272 / 54
        busy_us = frame + 16 + 40 + 34
    r = random.Random(seed)
    stage = [0] * n
    counter = [r.randrange(cw_min) for _ in range(n)]
    idle = succ = coll = 0
    for _ in range(slots):
        ready = [i for i in range(n) if counter[i] == 0]
        if not ready:
            idle += 1
            counter = [c - 1 for c in counter]
            continue
        if len(ready) == 1:
            succ += 1
            i = ready[0]
            stage[i] = 0
            counter[i] = r.randrange(cw_min) + 1  # +1: the common decrement below
        else:
            coll += 1
            for i in ready:
                stage[i] = min(stage[i] + 1, max_stage)
                counter[i] = r.randrange(cw_min * 2 ** stage[i]) + 1
        counter = [c - 1 for c in counter]
    total_us = idle * slot_us + (succ + coll) * busy_us
    return {
        "throughput": succ * 8000 / (total_us * 1e-6),
        "collision_fraction": coll / slots,
        "idle": idle, "success": succ, "collision": coll,
    }
