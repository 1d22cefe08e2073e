#!/usr/bin/env python3
"""Brute-force caption metrics used to freeze golden_scores.json.

Deliberately naive: n-gram vectors are dense over the sorted universe of all
n-grams in the corpus, counts come from linear scans, LCS from a memoized
recursion. Run: python3 metric_oracle.py golden_corpus.json > golden_scores.json
"""
import functools
import json
import math
import string
import sys

PUNCT = set(string.punctuation)


def tokenize(text):
    out = []
    for word in text.lower().split():
        head = []
        while word and word[0] in PUNCT:
            head.append(word[0])
            word = word[1:]
        tail = []
        while word and word[-1] in PUNCT:
            tail.insert(0, word[-1])
            word = word[:-1]
        out.extend(head)
        if word:
            out.append(word)
        out.extend(tail)
    return out


def ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def count(seq, gram):
    return sum(1 for g in seq if g == gram)


def bleu(cand, refs, max_n=4):
    c = len(cand)
    if c == 0:
        return [0.0] * max_n
    # closest reference length, ties to the shorter one
    r = sorted((abs(len(x) - c), len(x)) for x in refs)[0][1]
    bp = 1.0 if c >= r else math.exp(1.0 - r / c)
    precisions = []
    for n in range(1, max_n + 1):
        cg = ngrams(cand, n)
        if not cg:
            precisions.append(0.0)
            continue
        clipped = 0
        for g in set(cg):
            best = max(count(ngrams(ref, n), g) for ref in refs)
            clipped += min(count(cg, g), best)
        precisions.append(clipped / len(cg))
    out = []
    for n in range(1, max_n + 1):
        ps = precisions[:n]
        if min(ps) == 0.0:
            out.append(0.0)
        else:
            out.append(bp * math.exp(sum(math.log(p) for p in ps) / n))
    return out


def lcs(a, b):
    @functools.lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))
    return go(0, 0)


def rouge_l(cand, refs, beta=1.2):
    best = 0.0
    for ref in refs:
        l = lcs(tuple(cand), tuple(ref))
        if l == 0 or not cand or not ref:
            continue
        p, r = l / len(cand), l / len(ref)
        f = (1 + beta ** 2) * p * r / (r + beta ** 2 * p)
        best = max(best, f)
    return best


def cider(cands, refs, variant, sigma=6.0):
    ids = sorted(cands)
    n_docs = len(ids)
    scores = {}
    for i in ids:
        total = 0.0
        for n in range(1, 5):
            universe = set()
            for j in ids:
                universe.update(ngrams(cands[j], n))
                for ref in refs[j]:
                    universe.update(ngrams(ref, n))
            universe = sorted(universe)
            idf = []
            for g in universe:
                df = sum(1 for j in ids if any(g in ngrams(ref, n) for ref in refs[j]))
                idf.append(math.log(n_docs / max(df, 1)))
            def vec(seq):
                grams = ngrams(seq, n)
                return [count(grams, g) * w for g, w in zip(universe, idf)]
            vc = vec(cands[i])
            nc = math.sqrt(sum(x * x for x in vc))
            acc = 0.0
            for ref in refs[i]:
                vr = vec(ref)
                nr = math.sqrt(sum(x * x for x in vr))
                if nc == 0 or nr == 0:
                    continue
                if variant == "cider":
                    dot = sum(a * b for a, b in zip(vc, vr))
                    acc += dot / (nc * nr)
                else:
                    dot = sum(min(a, b) * b for a, b in zip(vc, vr))
                    delta = len(cands[i]) - len(ref)
                    acc += dot / (nc * nr) * math.exp(-(delta ** 2) / (2 * sigma ** 2))
            total += acc / len(refs[i])
        scores[i] = 10.0 * total / 4
    return scores


def main():
    corpus = json.load(open(sys.argv[1]))
    cands = {int(k): tokenize(v) for k, v in corpus["candidates"].items()}
    refs = {int(k): [tokenize(r) for r in v] for k, v in corpus["references"].items()}
    cid = cider(cands, refs, "cider")
    cid_d = cider(cands, refs, "cider_d")
    out = {}
    for i in sorted(cands):
        b = bleu(cands[i], refs[i])
        out[str(i)] = {"b1": b[0], "b2": b[1], "b3": b[2], "b4": b[3],
                       "rouge_l": rouge_l(cands[i], refs[i]),
                       "cider": cid[i], "cider_d": cid_d[i]}
    print(json.dumps(out, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
