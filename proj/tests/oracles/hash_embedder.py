"""Reference implementation of the character-trigram hash embedder.

Prints frozen bucket counts and cosine rankings used by the C++ tests.
"""
import math
import sys
import unicodedata

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
SEED = 0x9E3779B97F4A7C15
MASK = (1 << 64) - 1


def fnv(data: bytes) -> int:
    h = FNV_OFFSET ^ SEED
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK
    return h


def counts(text: str, dim: int) -> list:
    s = "\u0002" + unicodedata.normalize("NFC", text).lower() + "\u0003"
    v = [0] * dim
    for i in range(len(s) - 2):
        v[fnv(s[i:i + 3].encode("utf-8")) % dim] += 1
    return v


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    return dot / math.sqrt(sum(x * x for x in a) * sum(y * y for y in b))


E2E_TM = [
    "The patient has a high fever.",
    "The patient has a mild cough.",
    "Wash your hands with soap and water.",
    "The clinic opens at eight in the morning.",
    "Drink plenty of fluids every day.",
    "The child has a high temperature.",
]
E2E_QUERY = "The patient has a high temperature."


def main():
    dim = 384
    for t in ["Hello", "The patient has a high fever.", "Fiebre alta"]:
        nz = [(i, c) for i, c in enumerate(counts(t, dim)) if c]
        print(repr(t), nz)
    q = counts(E2E_QUERY, dim)
    ranked = sorted(((cosine(q, counts(s, dim)), i, s) for i, s in enumerate(E2E_TM)), key=lambda r: (-r[0], r[1]))
    for sim, i, s in ranked:
        print(f"{sim:.6f}\t{i}\t{s}")


if __name__ == "__main__":
    sys.exit(main())
