#!/usr/bin/env python3
"""Cut a miniature WNDB database out of a full WordNet 3.0 install.

Keeps every synset of the listed lemmas, renumbers offsets so each data
line starts at its own byte offset, drops pointers that leave the subset,
and regenerates matching index files.

usage: make_wordnet_fixture.py <wordnet-3.0 dict dir> <out dir>
"""
import os
import sys

LEMMAS = {
    "n": ["dog", "sofa", "couch", "crepe", "pancake", "key", "telephone", "charger",
          "toothbrush", "wallet", "eagle", "refuge", "wolf"],
    "v": ["breathe", "forget", "bark"],
    "a": ["remote", "thin"],
    "r": ["quickly"],
}
POS_NAME = {"n": "noun", "v": "verb", "a": "adj", "r": "adv"}
HEADER = [
    "  1 This software and database is being provided to you, the LICENSEE, by  ",
    "  2 Princeton University under the following license.  By obtaining, using  ",
    "  3 and/or copying this software and database, you agree that you have  ",
    "  4 read, understood, and will comply with these terms and conditions.:  ",
]


def read_lines(path):
    with open(path, "rb") as f:
        return f.read().decode("latin-1").replace("\r\n", "\n").split("\n")


def parse_index(dict_dir, pos):
    out = {}
    for line in read_lines(os.path.join(dict_dir, "index." + POS_NAME[pos])):
        if not line or line.startswith(" "):
            continue
        f = line.split()
        lemma, synset_cnt, p_cnt = f[0], int(f[2]), int(f[3])
        offsets = f[4 + p_cnt + 2:4 + p_cnt + 2 + synset_cnt]
        out[lemma] = offsets
    return out


def parse_data(dict_dir, pos):
    out = {}
    for line in read_lines(os.path.join(dict_dir, "data." + POS_NAME[pos])):
        if not line or line.startswith(" "):
            continue
        out[line[:8]] = line
    return out


def main(dict_dir, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    keep = {}
    data = {}
    for pos, lemmas in LEMMAS.items():
        index = parse_index(dict_dir, pos)
        data[pos] = parse_data(dict_dir, pos)
        keep[pos] = sorted({o for l in lemmas for o in index[l]})

    # First pass: line bodies with old offsets, to fix the new offsets.
    new_offset = {}
    bodies = {}
    for pos in LEMMAS:
        off = sum(len(h) + 1 for h in HEADER)
        for old in keep[pos]:
            f = data[pos][old].split(" ")
            bar = f.index("|")
            head, gloss = f[:bar], " ".join(f[bar + 1:]).strip()
            w_cnt = int(head[3], 16)
            words = head[4:4 + 2 * w_cnt]
            p_cnt = int(head[4 + 2 * w_cnt])
            ptrs = head[5 + 2 * w_cnt:5 + 2 * w_cnt + 4 * p_cnt]
            tail = head[5 + 2 * w_cnt + 4 * p_cnt:]
            kept = [ptrs[i:i + 4] for i in range(0, len(ptrs), 4)
                    if ptrs[i + 1] in keep.get(ptrs[i + 2].replace("s", "a"), [])]
            bodies[(pos, old)] = (head[1:4], words, kept, tail, gloss)
            line = build(0, *bodies[(pos, old)], lambda p, o: o)
            new_offset[(pos, old)] = off
            off += len(line.encode("latin-1")) + 1

    def remap(p, o):
        return "%08d" % new_offset[(p.replace("s", "a"), o)]

    lemma_map = {pos: {} for pos in LEMMAS}
    ptr_syms = {}
    for pos in LEMMAS:
        lines = list(HEADER)
        for old in keep[pos]:
            line = build(new_offset[(pos, old)], *bodies[(pos, old)], remap)
            lines.append(line)
            words = bodies[(pos, old)][1]
            for w in words[0::2]:
                w = w.lower()
                for m in ("(a)", "(p)", "(ip)"):
                    if w.endswith(m):
                        w = w[:-len(m)]
                lemma_map[pos].setdefault(w, []).append(new_offset[(pos, old)])
                ptr_syms.setdefault((pos, w), set()).update(x[0] for x in bodies[(pos, old)][2])
        with open(os.path.join(out_dir, "data." + POS_NAME[pos]), "wb") as f:
            f.write(("\n".join(lines) + "\n").encode("latin-1"))
        idx = list(HEADER)
        for lemma in sorted(lemma_map[pos]):
            offs = lemma_map[pos][lemma]
            syms = sorted(ptr_syms.get((pos, lemma), ()))
            idx.append(" ".join([lemma, pos, str(len(offs)), str(len(syms))] + syms +
                                [str(len(offs)), "0"] + ["%08d" % o for o in offs]) + "  ")
        with open(os.path.join(out_dir, "index." + POS_NAME[pos]), "wb") as f:
            f.write(("\n".join(idx) + "\n").encode("latin-1"))
    print(sum(len(v) for v in keep.values()), "synsets written to", out_dir)


def build(offset, head, words, ptrs, tail, gloss, remap):
    parts = ["%08d" % offset] + list(head) + list(words) + ["%03d" % len(ptrs)]
    for sym, o, p, st in ptrs:
        parts += [sym, remap(p, o), p, st]
    parts += list(tail) + ["|", gloss]
    return " ".join(parts) + "  "


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
