"""Regenerate src/tsshunt/data/lexicon_en.tsv.

Frequencies come from wordfreq; a word is kept only when it is a dictionary
word (web2 or gcide, allowing simple inflections) or a listed brand term.
Run once; the output file is committed.
"""

import argparse
import re
from pathlib import Path

from english_words import get_english_words_set
from wordfreq import top_n_list, word_frequency

HERE = Path(__file__).resolve().parent
OUT = HERE.parent / "src" / "tsshunt" / "data" / "lexicon_en.tsv"
SUFFIXES = ("s", "es", "ed", "d", "ing", "er", "ers", "ly")


def _is_dictionary_word(word, dictionary):
    if word in dictionary:
        return True
    for suffix in SUFFIXES:
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            if word[: -len(suffix)] in dictionary:
                return True
    return False


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--top", type=int, default=60000)
    ap.add_argument("--scale", type=float, default=1e9)
    args = ap.parse_args()

    dictionary = get_english_words_set(["web2", "gcide"], lower=True, alpha=False)
    brands = {
        line.strip()
        for line in (HERE / "brand_terms.txt").read_text().splitlines()
        if line.strip() and not line.startswith("#")
    }
    rows = []
    for word in top_n_list("en", args.top):
        if not re.fullmatch(r"[a-z]+", word):
            continue
        if len(word) == 1 and word not in ("a", "i"):
            continue
        if word not in brands and not _is_dictionary_word(word, dictionary):
            continue
        count = int(round(word_frequency(word, "en") * args.scale))
        if count > 0:
            rows.append((word, count))
    for word in sorted(brands - {w for w, _ in rows}):
        count = int(round(word_frequency(word, "en") * args.scale))
        rows.append((word, max(count, 1)))
    rows.sort(key=lambda r: (-r[1], r[0]))
    with OUT.open("w", encoding="utf-8") as fh:
        for word, count in rows:
            fh.write(f"{word}\t{count}\n")
    print(f"wrote {len(rows)} words to {OUT}")


if __name__ == "__main__":
    main()
