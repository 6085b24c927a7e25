#!/usr/bin/env python3
"""Regenerate the synthetic benchmark motif fixtures.

Residue ranges, scaffold lengths and redesignable positions follow the
30-case benchmark table. Coordinates are ideal alpha-helix backbones and
fixed residue identities are ALA placeholders; real motif coordinates must
be extracted from the deposited structures. 27_4XOJ.pdb is hand-maintained
and never overwritten.
"""
import math
import os
import sys

CASES = [
    (1, "1LDB", 125, "A186-206", ""),
    (2, "1ITU", 150, "A124-147", ""),
    (3, "2CGA", 125, "A184-194", ""),
    (4, "5WN9", 75, "A170-189", "A170-175;A188-189"),
    (5, "5ZE9", 100, "A229-243", ""),
    (6, "6E6R", 75, "A25-35", "A25-35"),
    (7, "6E6R", 200, "A25-35", "A25-35"),
    (8, "7AD5", 125, "A99-113", ""),
    (9, "7CG5", 125, "A6-20", ""),
    (10, "7WRK", 125, "A80-94", ""),
    (11, "3TQB", 125, "A37-51;A65-79", ""),
    (12, "4JHW", 100, "F63-69;F196-212", "F63;F69;F196;F198;F203;F211-212"),
    (13, "4JHW", 200, "F63-69;F196-212", "F63;F69;F196;F198;F203;F211-212"),
    (14, "5IUS", 100, "A63-82;A119-140",
     "A63;A65;A67;A69;A71-72;A76;A79-80;A82;A119-123;A125;A127;A129-130;A133;A135;A137-138;A140"),
    (15, "7A8S", 100, "A41-55;A72-86", ""),
    (16, "7BNY", 125, "A83-97;A111-125", ""),
    (17, "7DGW", 125, "A22-36;A70-84", ""),
    (18, "7MQQ", 100, "A80-94;A115-129", ""),
    (19, "7MQQ", 200, "A80-94;A115-129", ""),
    (20, "7UWL", 175, "E63-73;E101-111", "E63-73;E101-103;E105-111"),
    (21, "1B73", 125, "A7-8;A70;A178-180", "A179"),
    (22, "1BCF", 125, "A18-25;A47-54;A92-99;A123-130",
     "A19-25;A47-50;A52-53;A92-93;A95-99;A123-126;A128-129"),
    (23, "1MPY", 125, "A153;A199;A214;A246;A255;A265", ""),
    (24, "1QY3", 225, "A58-71;A96;A222", "A58-61;A63-64;A68-71"),
    (25, "2RKX", 225, "A9-11;A48-50;A101;A128;A169;A176;A201;A222-224", "A10;A49;A223"),
    (26, "3B5V", 200, "A51-53;A81;A110;A131;A159;A180-184;A210-211;A231-233", "A52;A181;A183;A232"),
    (27, "4XOJ", 150, "A55;A99;A190-192", "A191"),
    (28, "5YUI", 75, "A93-97;A118-120;A198-200", "A93;A95;A97;A118;A120"),
    (29, "6CPA", 200, "A69-72;A127;A196;A248;A270", "A70-71"),
    (30, "7UWL", 175, "E63-73;E101-111;E132-142;E165-174",
     "E63-73;E101-103;E105-111;E132-142;E165-174"),
]


def ranges(text):
    out = []
    for item in filter(None, text.split(";")):
        chain, rest = item[0], item[1:]
        lo, _, hi = rest.partition("-")
        out.append((chain, int(lo), int(hi or lo)))
    return out


def helix_atoms(i):
    theta = math.radians(100.0 * i)
    z = 1.5 * i
    spec = [
        ("N", 1.55, -28.0, -0.84),
        ("CA", 2.30, 0.0, 0.0),
        ("C", 1.60, 27.0, 0.90),
        ("O", 1.80, 36.0, 2.10),
    ]
    for name, r, dphi, dz in spec:
        phi = theta + math.radians(dphi)
        yield name, (r * math.cos(phi), r * math.sin(phi), z + dz)


def atom_line(serial, name, resn, chain, resseq, xyz):
    padded = (" " + name).ljust(4) if len(name) < 4 else name
    x, y, z = xyz
    return (f"ATOM  {serial:5d} {padded} {resn:>3s} {chain}{resseq:4d}    "
            f"{x:8.3f}{y:8.3f}{z:8.3f}{1.0:6.2f}{0.0:6.2f}          {name[0]:>2s}  ")


def render(case, pdb, length, motif, redesign):
    segs = ranges(motif)
    redesign_set = {(c, r) for c, lo, hi in ranges(redesign) for r in range(lo, hi + 1)}
    placement = [str(segs[0][1] - 1)]
    used = segs[0][1] - 1
    for k, (_, lo, hi) in enumerate(segs):
        placement.append(chr(ord("A") + k))
        used += hi - lo + 1
        if k + 1 < len(segs):
            gap = segs[k + 1][1] - hi - 1
            placement.append(str(gap))
            used += gap
    placement.append(str(max(length - used, 0)))
    lines = [
        f"REMARK 1 Reference PDB ID: {pdb}",
        f"REMARK 2 Motif Segment Placement in Reference PDB: {';'.join(placement)}",
        f"REMARK 3 Length for Designed Scaffolds: {length}",
    ]
    serial = 1
    for k, (chain, lo, hi) in enumerate(segs):
        seg_id = chr(ord("A") + k)
        # segments sit on parallel helix axes 12 A apart, offset along the ring
        ox, oy = 12.0 * math.cos(k * 2.4), 12.0 * math.sin(k * 2.4)
        for j, resnum in enumerate(range(lo, hi + 1)):
            resn = "UNK" if (chain, resnum) in redesign_set else "ALA"
            for name, (x, y, z) in helix_atoms(j + 3 * k):
                lines.append(atom_line(serial, name, resn, seg_id, j + 1, (x + ox, y + oy, z)))
                serial += 1
        lines.append("TER")
    lines.append("END   ")
    return "\n".join(lines) + "\n"


def main(out_dir):
    for case, pdb, length, motif, redesign in CASES:
        if pdb == "4XOJ":
            continue
        path = os.path.join(out_dir, f"{case:02d}_{pdb}.pdb")
        with open(path, "w", newline="\n") as fh:
            fh.write(render(case, pdb, length, motif, redesign))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/fixtures/motifs")
