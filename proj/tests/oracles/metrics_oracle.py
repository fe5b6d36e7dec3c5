"""Reference values for tests/metrics_test.cpp.

Independent implementations: BLEU via collections.Counter intersection,
LCS via memoized recursion, METEOR-lite via explicit alignment lists.
Run: python3 tests/oracles/metrics_oracle.py
"""
import math
from collections import Counter
from functools import lru_cache

CORPUS = [
    ("what year did the war end ?".split(), "in what year did the war end ?".split()),
    ("who wrote the novel ?".split(), "who is the author of the novel ?".split()),
    ("where were the cats sitting ?".split(), "where was the cat sitting ?".split()),
]


def grams(toks, n):
    return Counter(tuple(toks[i:i + n]) for i in range(len(toks) - n + 1))


def corpus_bleu(pairs, max_n):
    m = [0] * max_n
    t = [0] * max_n
    c = r = 0
    for cand, ref in pairs:
        c += len(cand)
        r += len(ref)
        for n in range(1, max_n + 1):
            cg, rg = grams(cand, n), grams(ref, n)
            m[n - 1] += sum((cg & rg).values())
            t[n - 1] += sum(cg.values())
    if any(x == 0 for x in m):
        return 0.0
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return bp * math.exp(sum(math.log(a / b) for a, b in zip(m, t)) / max_n)


def sentence_bleu(cand, ref, max_n):
    logs = []
    for n in range(1, max_n + 1):
        cg, rg = grams(cand, n), grams(ref, n)
        tot = sum(cg.values())
        hit = sum((cg & rg).values())
        logs.append(math.log(hit / tot) if hit and tot else math.log(1e-9))
    bp = 1.0 if len(cand) >= len(ref) else math.exp(1 - len(ref) / len(cand))
    return bp * math.exp(sum(logs) / max_n)


def lcs(a, b):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))
    return go(0, 0)


def rouge_l(cand, ref, beta=1.2):
    l = lcs(tuple(cand), tuple(ref))
    if l == 0:
        return 0.0
    p, r = l / len(cand), l / len(ref)
    return (1 + beta ** 2) * p * r / (r + beta ** 2 * p)


RULES = [("ingly", ""), ("edly", ""), ("ies", "y"), ("ing", ""), ("ed", ""),
         ("es", ""), ("ly", ""), ("s", "")]


def stem(w):
    for suf, rep in RULES:
        if len(w) >= len(suf) + 3 and w.endswith(suf):
            if suf == "s" and w.endswith("ss"):
                continue
            return w[: -len(suf)] + rep
    return w


def meteor(cand, ref):
    align = {}
    free = list(range(len(ref)))
    for key in (lambda x: x, stem):
        for i, w in enumerate(cand):
            if i in align:
                continue
            for j in free:
                if key(w) == key(ref[j]):
                    align[i] = j
                    free.remove(j)
                    break
    m = len(align)
    if m == 0:
        return 0.0
    pairs = sorted(align.items())
    chunks = 1
    for (i0, j0), (i1, j1) in zip(pairs, pairs[1:]):
        if not (i1 == i0 + 1 and j1 == j0 + 1):
            chunks += 1
    p, r = m / len(cand), m / len(ref)
    f = 10 * p * r / (r + 9 * p)
    return f * (1 - 0.5 * (chunks / m) ** 3)


if __name__ == "__main__":
    for n in range(1, 5):
        print(f"corpus_bleu{n} {corpus_bleu(CORPUS, n)!r}")
    for k, (c, r) in enumerate(CORPUS):
        print(f"pair{k} sbleu4 {sentence_bleu(c, r, 4)!r} rougeL {rouge_l(c, r)!r} "
              f"meteor {meteor(c, r)!r}")
    print("cat_sat", rouge_l("the cat sat".split(), "the dog sat".split()),
          meteor("the cat sat".split(), "the dog sat".split()),
          sentence_bleu("the cat sat".split(), "the dog sat".split(), 4))
    print("cats_sit", meteor(["cats", "sit"], ["cat", "sat"]))
