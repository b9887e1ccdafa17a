#!/usr/bin/env python3
"""Independent model of the seeded feature-drop perturbation.

Re-implements MT19937-64, FNV-1a-64 stream keying and the drop procedure from
their published definitions, and writes the expected values consumed by
test_parser (tests/data/perturb_golden.json).
"""
import json
import math
import sys

MASK64 = (1 << 64) - 1


class MT19937_64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.index = 312
        self.mt[0] = seed & MASK64
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK64

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.index = 0

    def next(self):
        if self.index >= 312:
            self._twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK64


def fnv1a(h, data):
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def stream_seed(seed, example_id, slot, pass_index):
    h = 0xCBF29CE484222325
    h = fnv1a(h, seed.to_bytes(8, "little"))
    h = fnv1a(h, example_id.encode())
    h = fnv1a(h, b"\0")
    h = fnv1a(h, slot.encode())
    h = fnv1a(h, b"\0")
    h = fnv1a(h, pass_index.to_bytes(8, "little"))
    return h


def uniform(rng):
    return (rng.next() >> 11) * 2.0 ** -53


def perturbed(case):
    rng = MT19937_64(stream_seed(case["seed"], case["example_id"], case["slot"], case["pass"]))
    scores = []
    for terms in case["contributions"]:
        total = 0.0
        for t in terms:
            if uniform(rng) >= case["drop_rate"]:
                total += t
        scores.append(total)
    kept = [(k, s) for k, s in enumerate(scores) if not case["forbidden"][k]]
    temp = case["temperature"]
    top = max(s / temp for _, s in kept)
    exps = [(k, math.exp(s / temp - top)) for k, s in kept]
    z = sum(e for _, e in exps)
    return dict(exps)[case["target"]] / z


def cases():
    out = []
    specs = [
        (0, "w0001", "select.col", [[3.0, 1.5, 0.2], [0.0, 0.75, 0.1], [1.5, 0.0, -1.5]], [False, False, False], 0, 0.1, 1.0),
        (7, "w0002", "where[0].op", [[1.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 1.0, -2.0]], [False, False, True], 1, 0.3, 1.2),
        (123456789, "ex-α", "orderby.dir", [[2.0, -1.0], [0.5, 3.0], [2.0, 3.0], [0.0]], [True, False, False, False], 2, 0.5, 0.8),
        (2**63 + 11, "", "having[1].agg", [[-1.0, 3.0, 0.0], [1.5, 0.0, -2.0]], [False, False], 0, 0.9, 1.0),
    ]
    for seed, ex, slot, contrib, forbidden, target, d, temp in specs:
        for p in range(4):
            out.append({"seed": seed, "example_id": ex, "slot": slot, "pass": p, "contributions": contrib,
                        "forbidden": forbidden, "target": target, "drop_rate": d, "temperature": temp})
    return out


def main():
    rng = MT19937_64(5489)
    for _ in range(9999):
        rng.next()
    reference = rng.next()
    assert reference == 9981545732273789042, reference
    result = {"mt_10000th_default_seed": str(reference), "streams": [], "cases": []}
    for seed, ex, slot, p in [(0, "w0001", "select.col", 0), (42, "s017", "where.connector[0]", 3)]:
        r = MT19937_64(stream_seed(seed, ex, slot, p))
        result["streams"].append({"seed": seed, "example_id": ex, "slot": slot, "pass": p,
                                  "key": str(stream_seed(seed, ex, slot, p)),
                                  "first": [str(r.next()) for _ in range(3)]})
    for c in cases():
        c = dict(c)
        c["expected"] = perturbed(c)
        result["cases"].append(c)
    # Scripted fixture {A:0.5, B:0.3, C:0.2}: one log-probability term per option.
    result["passes"] = []
    for seed, d in [(7, 0.1), (7, 0.5), (99, 0.3)]:
        fixture = {"seed": seed, "example_id": "fixture", "slot": "select.col", "drop_rate": d, "temperature": 1.0,
                   "contributions": [[math.log(0.5)], [math.log(0.3)], [math.log(0.2)]],
                   "forbidden": [False, False, False], "target": 0}
        expected = [perturbed(dict(fixture, **{"pass": p})) for p in range(10)]
        result["passes"].append({"seed": seed, "example_id": "fixture", "slot": "select.col", "drop_rate": d,
                                 "options": ["A", "B", "C"], "probs": [0.5, 0.3, 0.2], "expected": expected})
    json.dump(result, sys.stdout, indent=1, ensure_ascii=False)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
