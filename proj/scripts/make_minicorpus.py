#!/usr/bin/env python3
"""Build data/minicorpus.tsv from the CMU Pronouncing Dictionary.

Pronunciations are converted from ARPAbet to a DISC-style single-character
alphabet and syllabified with a maximal-onset rule (legal English onsets),
adjusted so that a stressed lax vowel keeps one consonant in its coda.
The output is a reproducible stand-in for a licensed syllabified lexicon.

Usage:
    pip download cmudict --no-deps -d /tmp/cmu   # or any cmudict.dict copy
    python3 scripts/make_minicorpus.py /path/to/cmudict.dict data/minicorpus.tsv
"""

import random
import re
import sys

# DISC uses '#' for the open back vowel; '#' is reserved by the corpus
# format, so 'A' stands in for it here.
ARPA_TO_DISC = {
    "AA": "A", "AE": "{", "AO": "$", "AW": "6", "AY": "2", "EH": "E",
    "EY": "1", "IH": "I", "IY": "i", "OW": "5", "OY": "4", "UH": "U",
    "UW": "u",
    "B": "b", "CH": "J", "D": "d", "DH": "D", "F": "f", "G": "g", "HH": "h",
    "JH": "_", "K": "k", "L": "l", "M": "m", "N": "n", "NG": "N", "P": "p",
    "R": "r", "S": "s", "SH": "S", "T": "t", "TH": "T", "V": "v", "W": "w",
    "Y": "j", "Z": "z", "ZH": "Z",
}

LAX = set("IE{VQU")

ONSETS = set(
    """
    p b t d k g m n l r f v T D s z S h w j J _ Z
    pl bl kl gl pr br tr dr kr gr fr Tr Sr fl sl
    sw tw kw dw gw Tw sp st sk sm sn sf
    spl spr str skr skw skl
    pj bj fj vj kj gj mj hj spj skj
    """.split()
)

SEED = 2018
TARGET = 4000


def convert(arpa):
    """Returns (phones, is_vowel, stressed) or None for unusable entries."""
    phones, vowel, stress = [], [], []
    for tok in arpa:
        m = re.fullmatch(r"([A-Z]+)([012]?)", tok)
        if not m:
            return None
        base, digit = m.group(1), m.group(2)
        if base == "AH":
            sym = "@" if digit == "0" else "V"
        elif base == "ER":
            if digit == "0":
                phones += ["@"]
                vowel += [True]
                stress += [False]
                continue
            sym = "3"
        elif base in ARPA_TO_DISC:
            sym = ARPA_TO_DISC[base]
        else:
            return None
        phones.append(sym)
        vowel.append(digit != "")
        stress.append(digit == "1" or digit == "2")
    return phones, vowel, stress


def syllabify(phones, vowel, stress):
    nuclei = [i for i, v in enumerate(vowel) if v]
    bits = [0] * (len(phones) - 1)
    for left, right in zip(nuclei, nuclei[1:]):
        cluster = phones[left + 1:right]
        m = len(cluster)
        split = m  # index into cluster where the onset starts
        for start in range(m + 1):
            onset = "".join(cluster[start:])
            if onset == "" or onset in ONSETS:
                split = start
                break
        if split == 0 and m >= 1 and phones[left] in LAX and stress[left]:
            split = 1
        # boundary sits in the gap before phones[left + 1 + split]
        bits[left + split] = 1
    return bits


def render(phones, bits):
    out = [phones[0]]
    for p, b in zip(phones[1:], bits):
        if b:
            out.append("-")
        out.append(p)
    return "".join(out)


def main():
    src, dst = sys.argv[1], sys.argv[2]
    entries = {}
    with open(src, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#")[0].strip()
            if not line:
                continue
            word, *arpa = line.split()
            if "(" in word or not re.fullmatch(r"[a-z]+", word):
                continue
            if len(word) < 2 or word in entries:
                continue
            conv = convert(arpa)
            if conv is None:
                continue
            phones, vowel, stress = conv
            nsyl = sum(vowel)
            if nsyl < 1 or nsyl > 5:
                continue
            entries[word] = render(phones, syllabify(phones, vowel, stress))

    words = sorted(entries)
    rng = random.Random(SEED)
    chosen = sorted(rng.sample(words, TARGET))
    with open(dst, "w", encoding="utf-8") as out:
        out.write("# Syllabified English mini-corpus (DISC-style phones).\n")
        out.write("# Derived from the CMU Pronouncing Dictionary; see\n")
        out.write("# LICENSE.cmudict. Syllable boundaries are rule-generated\n")
        out.write("# (maximal onset, stressed lax vowels keep a coda consonant).\n")
        out.write("# 'A' replaces DISC '#' (open back vowel).\n")
        for w in chosen:
            out.write(f"{w}\t{entries[w]}\n")


if __name__ == "__main__":
    main()
