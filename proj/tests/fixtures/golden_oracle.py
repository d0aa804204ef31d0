#!/usr/bin/env python3
"""Reference tokenizer used once to produce golden_tokens.json.

Written against the documented pipeline rules with Python's csv, re and
unicodedata modules, independently of the C++ code. Rerun only when the
rules change on purpose:

    python3 golden_oracle.py golden_records.csv ../../data/stopwords_en.txt > golden_tokens.json
"""
import csv
import json
import re
import sys
import unicodedata
from pathlib import Path

URL = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*://\S*")


def join_text(title, abstract, keywords):
    parts = [p.strip() for p in (title, abstract) if p.strip()]
    kws = [k.strip() for k in keywords.split(";") if k.strip()]
    if kws:
        parts.append("; ".join(kws))
    return ". ".join(parts)


def clean(text):
    text = URL.sub("", text)
    kept = []
    for ch in text:
        cat = unicodedata.category(ch)
        if ch.isspace():
            kept.append(" ")
        elif cat in ("Cc", "Cf", "So", "Co") or ch in "→⇒":
            continue
        else:
            kept.append(ch.lower())
    return " ".join("".join(kept).split())


def tokenize(text, lo=2, hi=15):
    out = []
    for tok in re.split(r"[^0-9a-zªµºÀ-ÖØ-öø-ɏ]+", text):
        if tok and lo <= len(tok) <= hi and not tok.isdigit():
            out.append(tok)
    return out


def stem(tok):
    while True:
        if tok.endswith("ies") and len(tok) > 3:
            tok = tok[:-3] + "y"
        elif tok.endswith("sses"):
            tok = tok[:-2]
        elif tok.endswith("s") and not tok.endswith("ss") and len(tok) > 3:
            tok = tok[:-1]
        elif tok.endswith("ing") and len(tok) - 3 >= 4:
            tok = tok[:-3]
        elif tok.endswith("ed") and len(tok) - 2 >= 4:
            tok = tok[:-2]
        else:
            return tok


def main(records_path, stopwords_path):
    stop = set()
    for line in Path(stopwords_path).read_text(encoding="utf-8").splitlines():
        stop.update(w.lower() for w in line.split("#", 1)[0].split())

    stem_name = Path(records_path).stem
    with open(records_path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    header, rows = rows[0], rows[1:]
    col = {name: i for i, name in enumerate(header)}

    records, seen = [], set()
    for n, row in enumerate(rows, start=1):
        title, abstract = row[col["Article Title"]], row[col["Abstract"]]
        if not title.strip() and not abstract.strip():
            continue
        text = join_text(title, abstract, row[col["Author Keywords"]])
        key = " ".join(text.lower().split())
        if key in seen:
            continue
        seen.add(key)
        records.append((f"{stem_name}:{n}", text))

    vocab, index, docs = [], {}, []
    for rid, text in records:
        toks = tokenize(clean(text))
        raw_len = len(toks)
        toks = [stem(t) for t in toks if t not in stop]
        toks = [t for t in toks if t not in stop]
        ids = []
        for t in toks:
            if t not in index:
                index[t] = len(vocab)
                vocab.append(t)
            ids.append(index[t])
        docs.append({"id": rid, "raw_len": raw_len, "token_ids": ids})

    json.dump({"vocabulary": vocab, "documents": docs}, sys.stdout, ensure_ascii=False, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
