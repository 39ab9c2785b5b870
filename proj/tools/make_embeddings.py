#!/usr/bin/env python3
"""Regenerates data/embeddings.txt and data/embedding_pairs.txt.

Tokens in one cluster share a random centre plus small noise, so
synonyms sit close together; everything else is an independent draw.
"""
import argparse
import pathlib

import numpy as np

CLUSTERS = [
    ["get", "fetch", "retrieve", "obtain", "acquire"],
    ["read", "load", "recv", "receive", "scan"],
    ["exec", "execute", "run", "invoke", "launch"],
    ["write", "put", "store", "save", "print"],
    ["query", "search", "lookup", "find", "select"],
    ["string", "str", "text", "chars"],
    ["append", "concat", "join", "add"],
    ["close", "shutdown", "dispose", "release"],
    ["delete", "remove", "erase", "clear"],
    ["error", "exception", "fault", "failure"],
    ["connection", "session", "socket", "channel"],
    ["integer", "int", "number", "num"],
]

SINGLETONS = """
line env property input stream open query result set header field list
catalog init exec send error replace update format prepare statement
batch value of to lower case iaload iastore aaload decode unsigned parse
strip printf imul isub lsub sum long short byte i2s i2b char array
plain connection bytes request idiv irem ldiv abs signum sleep rotate
left reverse name for equals hash code if icmplt highest one bit evaluate
upper count length is empty current thread info log exists contains key
runtime nano time content type auto commit handle caught phi checkcast
out trim substring intern builder url file buffered reader
""".split()


def unit(v):
    return v / np.linalg.norm(v)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="data")
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--noise", type=float, default=0.15)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)

    table = {}
    for cluster in CLUSTERS:
        centre = unit(rng.standard_normal(10))
        for tok in cluster:
            table[tok] = unit(centre + args.noise * rng.standard_normal(10))
    for tok in SINGLETONS:
        if tok not in table:
            table[tok] = unit(rng.standard_normal(10))

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "embeddings.txt", "w") as f:
        for tok in sorted(table):
            f.write(tok + " " + " ".join(f"{x:.9f}" for x in table[tok]) + "\n")

    # Pairs for the similarity smoke test: synonyms from the same cluster,
    # unrelated pairs from different clusters.
    with open(out / "embedding_pairs.txt", "w") as f:
        f.write("# kind token_a token_b\n")
        for cluster in CLUSTERS:
            f.write(f"synonym {cluster[0]} {cluster[1]}\n")
        for i in range(len(CLUSTERS)):
            a = CLUSTERS[i][0]
            b = CLUSTERS[(i + 5) % len(CLUSTERS)][2]
            if abs(float(table[a] @ table[b])) < 0.5:
                f.write(f"unrelated {a} {b}\n")


if __name__ == "__main__":
    main()
