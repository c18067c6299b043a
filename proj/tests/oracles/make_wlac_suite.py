"""Builds the 200-query WLAC suite with a fixture sampler and the expected
completion of every query under three settings, computed by enumeration.

Settings: (hyps 10, top_k 10, 1 run), (20, 20, 1 run), (20, 20, 5 runs),
temperatures in [1.0, 1.3], schedule seed 7.

Usage: python3 make_wlac_suite.py > ../fixtures/wlac_suite.json
"""
import json
import math
import random
import sys

MASK = (1 << 64) - 1
SP = "▁"


class MT64:
    """std::mt19937_64."""

    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & MASK
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.idx = 312

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.idx = 0

    def __call__(self):
        if self.idx >= 312:
            self._twist()
        y = self.mt[self.idx]
        self.idx += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK


def temperatures(lo, hi, runs, seed):
    rng = MT64(seed)
    out = [lo]
    for _ in range(1, runs):
        u = float(rng()) / 18446744073709551616.0
        if u >= 1.0:
            u = math.nextafter(1.0, 0.0)
        out.append(lo if lo == hi else lo + (hi - lo) * u)
    return out


def bucket(t):
    return int(math.floor(t * 10.0 + 0.5))


def detokenize(tokens):
    if any(SP in t for t in tokens):
        return "".join(tokens).replace(SP, " ").strip()
    return " ".join(tokens).strip()


def continuation(hyp, prefix):
    p = prefix.strip()
    return hyp[len(p):].strip() if hyp.startswith(p) else hyp


def prefix_applies(left):
    left = left.strip()
    if not left:
        return False
    first = next((c for c in left if c.isalpha()), None)
    return first is None or first.isupper() or not first.islower()


def complete(query, entries, hyps, top_k, runs, temps):
    use_prefix = prefix_applies(query["left"])
    prefix = query["left"].strip()
    for r in range(runs):
        cands = []
        keys = [(query["source"], None)]
        if use_prefix:
            keys.append((query["source"], prefix))
        for src, pre in keys:
            got = []
            for h in entries.get((src, pre, bucket(temps[r])), []):
                if len(got) == hyps:
                    break
                if h["min_top_k"] <= top_k:
                    got.append(h["tokens"])
            for toks in got:
                s = detokenize(toks)
                if pre is not None:
                    s = continuation(s, pre)
                cands.extend(s.split())
        for c in cands:
            if c.startswith(query["typed"]):
                return c
        for c in cands:
            if c.casefold().startswith(query["typed"].casefold()):
                return c
    return None


SETTINGS = {"h10_k10_r1": (10, 10, 1), "h20_k20_r1": (20, 20, 1), "h20_k20_r5": (20, 20, 5)}


def main():
    rnd = random.Random(20240501)
    syll = ["ka", "lo", "mi", "ten", "ra", "sol", "ver", "do", "pin", "gu", "zar", "bel", "quo", "nif", "tas"]

    def word():
        return "".join(rnd.choice(syll) for _ in range(rnd.randint(2, 4)))

    temps = temperatures(1.0, 1.3, 5, 7)
    late = next(bucket(t) for t in temps[1:] if bucket(t) != 10)
    entries = {}
    queries = []

    def add(src, pre, b, tokens, min_top_k=1):
        entries.setdefault((src, pre, b), []).append({"tokens": tokens, "min_top_k": min_top_k})

    def other(avoid):
        while True:
            w = word()
            if not w.startswith(avoid):
                return w

    def filler(src, pre, b, count, avoid):
        for _ in range(count):
            ws = [w for w in (word() for _ in range(5)) if not w.startswith(avoid)]
            add(src, pre, b, ws)

    # Category sizes: A hit everywhere, B needs 20 hypotheses, C needs
    # top_k 20, D needs a later run, E never hits.
    plan = ["A"] * 138 + ["B"] * 2 + ["C"] * 2 + ["D"] * 4 + ["E"] * 54
    rnd.shuffle(plan)
    for i, cat in enumerate(plan):
        src = f"源句 {i:03d} " + "".join(rnd.choice("医院病人发烧药") for _ in range(6))
        gold = word() + rnd.choice(["er", "ing", "ous", "al"])
        typed = gold[: rnd.randint(1, 3)]
        style = i % 4
        left = ["", "the", "The patient", "Doctor said"][style]
        right = rnd.choice(["", "today", "in the ward"])
        if rnd.random() < 0.1:
            typed = typed.upper()
        q = {"source": src, "left": left, "right": right, "typed": typed, "gold": gold}
        avoid = typed.casefold()[:1]
        use_prefix = prefix_applies(left)
        if cat == "A":
            if use_prefix and i % 8 == 2:
                filler(src, None, 10, 3, avoid)
                add(src, left, 10, left.split() + [other(avoid), gold])
            else:
                filler(src, None, 10, rnd.randint(0, 9), avoid)
                toks = [other(avoid), gold, other(avoid)]
                if i % 5 == 0:
                    toks = [SP + other(avoid), SP + gold[:2], gold[2:]]
                add(src, None, 10, toks)
        elif cat == "B":
            filler(src, None, 10, 12, avoid)
            add(src, None, 10, [other(avoid), gold])
        elif cat == "C":
            filler(src, None, 10, 4, avoid)
            add(src, None, 10, [gold, other(avoid)], min_top_k=15)
        elif cat == "D":
            filler(src, None, 10, 6, avoid)
            filler(src, None, late, 3, avoid)
            add(src, None, late, [other(avoid), gold])
        else:
            filler(src, None, 10, 8, avoid)
            if i % 3 == 0:
                # A wrong word sharing the typed prefix.
                add(src, None, 10, [typed.lower() + "zzq"])
        queries.append(q)

    for q in queries:
        q["expected"] = {name: complete(q, entries, *s, temps) for name, s in SETTINGS.items()}

    out_entries = []
    for (src, pre, b), hyps in entries.items():
        out_entries.append({"source": src, "prefix": pre, "temp": b / 10.0, "hypotheses": hyps})
    suite = {
        "settings": {n: {"num_hypotheses": h, "top_k": k, "max_runs": r} for n, (h, k, r) in SETTINGS.items()},
        "temp_lo": 1.0,
        "temp_hi": 1.3,
        "seed": 7,
        "temperatures": temps,
        "sampler": {"entries": out_entries},
        "queries": queries,
    }
    acc = {n: sum(q["expected"][n] == q["gold"] for q in queries) / len(queries) for n in SETTINGS}
    print(json.dumps(acc), file=sys.stderr)
    json.dump(suite, sys.stdout, ensure_ascii=False, indent=1)


if __name__ == "__main__":
    main()
