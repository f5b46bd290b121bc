#!/usr/bin/env python3
"""Fits the bundled logistic TF-IDF sentiment model.

Usage: train_sentiment_model.py CORPUS VECTORIZER OUT

VECTORIZER is the output of `fred fit-vectorizer` on the same corpus. Class 1
is "positive".
"""
import json
import re
import sys

import numpy as np
from sklearn.linear_model import LogisticRegression

TOKEN = re.compile(r"[\w']+")


def main():
    corpus_path, vec_path, out_path = sys.argv[1:4]
    vec = json.load(open(vec_path))
    vocab = vec["vocabulary"]
    idf = np.array(vec["idf"])
    docs = [json.loads(line) for line in open(corpus_path) if line.strip()]
    x = np.zeros((len(docs), len(vocab)))
    y = np.array([d["label"] == "positive" for d in docs], dtype=int)
    for i, d in enumerate(docs):
        for t in TOKEN.findall(d["text"].lower()):
            if t not in vocab:
                sys.exit(f"token {t!r} missing from vectorizer")
            x[i, vocab[t]] += idf[vocab[t]]
    clf = LogisticRegression(C=10.0, max_iter=5000).fit(x, y)
    coef = {t: round(float(clf.coef_[0][j]), 6) for t, j in sorted(vocab.items())}
    model = {
        "kind": "linear",
        "link": "logistic",
        "intercept": round(float(clf.intercept_[0]), 6),
        "coefficients": coef,
        "vectorizer": vec,
    }
    json.dump(model, open(out_path, "w"), indent=1)
    print(f"train accuracy {clf.score(x, y):.3f}")


if __name__ == "__main__":
    main()
