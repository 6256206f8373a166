#!/usr/bin/env python3
"""Build the LIBSVM-format benchmark files under data/ from raw public sources.

The LIBSVM mirror is not always reachable, so this script rebuilds the
binary datasets from the original UCI files:

  magic04      <- UCI MAGIC gamma telescope (comma separated, class g/h);
                  the copy shipped in the `keel-ds` wheel is identical.
  a9a          <- UCI Adult (adult.data + adult.test), binarised the way
                  LIBSVM's a9a is: continuous attributes cut into quantile
                  bins, categorical attributes one-hot, 123 binary features.
  german.numer <- UCI Statlog German credit (german.data), recoded into
                  24 numeric columns following the layout of the Strathclyde
                  german.data-numeric file (ordinal codes + indicators).

The a9a and german.numer reconstructions follow the published recipes but
are not byte-identical to the LIBSVM files. Pass --out to change the
destination directory.

Usage:
    python3 scripts/prepare_data.py --magic magic.dat --adult-train adult.data \
        --adult-test adult.test --german german.data --out data/
"""

import argparse
import bisect
import gzip
import os

ADULT_CATS = {
    "workclass": ["Private", "Self-emp-not-inc", "Self-emp-inc", "Federal-gov",
                  "Local-gov", "State-gov", "Without-pay", "Never-worked"],
    "education": ["Bachelors", "Some-college", "11th", "HS-grad", "Prof-school",
                  "Assoc-acdm", "Assoc-voc", "9th", "7th-8th", "12th", "Masters",
                  "1st-4th", "10th", "Doctorate", "5th-6th", "Preschool"],
    "marital": ["Married-civ-spouse", "Divorced", "Never-married", "Separated",
                "Widowed", "Married-spouse-absent", "Married-AF-spouse"],
    "occupation": ["Tech-support", "Craft-repair", "Other-service", "Sales",
                   "Exec-managerial", "Prof-specialty", "Handlers-cleaners",
                   "Machine-op-inspct", "Adm-clerical", "Farming-fishing",
                   "Transport-moving", "Priv-house-serv", "Protective-serv",
                   "Armed-Forces"],
    "relationship": ["Wife", "Own-child", "Husband", "Not-in-family",
                     "Other-relative", "Unmarried"],
    "race": ["White", "Asian-Pac-Islander", "Amer-Indian-Eskimo", "Other", "Black"],
    "sex": ["Female", "Male"],
    "country": ["United-States", "Cambodia", "England", "Puerto-Rico", "Canada",
                "Germany", "Outlying-US(Guam-USVI-etc)", "India", "Japan", "Greece",
                "South", "China", "Cuba", "Iran", "Honduras", "Philippines", "Italy",
                "Poland", "Jamaica", "Vietnam", "Mexico", "Portugal", "Ireland",
                "France", "Dominican-Republic", "Laos", "Ecuador", "Taiwan", "Haiti",
                "Columbia", "Hungary", "Guatemala", "Nicaragua", "Scotland",
                "Thailand", "Yugoslavia", "El-Salvador", "Trinadad&Tobago", "Peru",
                "Hong", "Holand-Netherlands"],
}

# (column, kind, bins-or-category-key) in a9a feature order
ADULT_LAYOUT = [
    (0, "num", 5), (1, "cat", "workclass"), (2, "num", 5), (3, "cat", "education"),
    (4, "num", 5), (5, "cat", "marital"), (6, "cat", "occupation"),
    (7, "cat", "relationship"), (8, "cat", "race"), (9, "cat", "sex"),
    (10, "zero", 2), (11, "zero", 2), (12, "num", 5), (13, "cat", "country"),
]


def write_libsvm(path, rows):
    with gzip.open(path, "wt") as out:
        for label, feats in rows:
            body = " ".join(f"{i}:{v}" for i, v in feats)
            out.write(f"{label} {body}\n" if body else f"{label}\n")


def fmt(v):
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def build_magic(path):
    rows = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("@"):
                continue
            parts = line.split(",")
            label = 1 if parts[-1].strip() == "g" else -1
            feats = [(i + 1, fmt(v)) for i, v in enumerate(parts[:-1]) if float(v) != 0.0]
            rows.append((label, feats))
    return rows


def read_adult(paths):
    records = []
    for p in paths:
        with open(p) as f:
            for line in f:
                line = line.strip()
                if not line or line.startswith("|"):
                    continue
                parts = [x.strip() for x in line.split(",")]
                if len(parts) != 15:
                    continue
                records.append(parts)
    return records


def build_a9a(paths):
    records = read_adult(paths)
    cuts = {}
    for col, kind, arg in ADULT_LAYOUT:
        if kind == "num":
            vals = sorted(float(r[col]) for r in records)
            cuts[col] = [vals[len(vals) * k // arg] for k in range(1, arg)]
    rows = []
    for r in records:
        feats = []
        offset = 1
        for col, kind, arg in ADULT_LAYOUT:
            raw = r[col]
            if kind == "cat":
                cats = ADULT_CATS[arg]
                if raw in cats:
                    feats.append((offset + cats.index(raw), 1))
                offset += len(cats)
            elif kind == "num":
                feats.append((offset + bisect.bisect_right(cuts[col], float(raw)), 1))
                offset += arg
            else:
                feats.append((offset + (0 if float(raw) == 0.0 else 1), 1))
                offset += arg
        assert offset == 124, offset
        label = 1 if r[14].rstrip(".") == ">50K" else -1
        rows.append((label, feats))
    return rows


def build_german(path):
    rows = []
    with open(path) as f:
        for line in f:
            a = line.split()
            if len(a) != 21:
                continue
            digit = lambda t: int(t[-1])
            cols = [
                digit(a[0]),                    # checking account status 1..4
                int(a[1]),                      # duration (months)
                digit(a[2]),                    # credit history 0..4
                int(round(int(a[4]) / 100.0)),  # credit amount in hundreds
                digit(a[5]),                    # savings 1..5
                digit(a[6]),                    # employment 1..5
                digit(a[8]),                    # personal status / sex 1..5
                int(a[10]),                     # present residence
                digit(a[11]),                   # property 1..4
                int(a[12]),                     # age
                int(a[7]),                      # installment rate
                int(a[15]),                     # existing credits
                int(a[17]),                     # people liable
                digit(a[18]),                   # telephone 1..2
                digit(a[19]),                   # foreign worker 1..2
                int(a[3] == "A40"),             # purpose: new car
                int(a[3] == "A41"),             # purpose: used car
                int(a[13] == "A143"),           # no other installment plans
                int(a[14] == "A151"),           # housing: rent
                int(a[14] == "A153"),           # housing: for free
                int(a[14] == "A152"),           # housing: own
                int(a[16] == "A174"),           # job: management / self-employed
                int(a[16] == "A172"),           # job: unskilled resident
                int(a[16] == "A173"),           # job: skilled
            ]
            # 1 = good, 2 = bad; LIBSVM's german.numer maps good to +1
            label = 1 if a[20] == "1" else -1
            feats = [(i + 1, v) for i, v in enumerate(cols) if v != 0]
            rows.append((label, feats))
    return rows


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--magic")
    ap.add_argument("--adult-train")
    ap.add_argument("--adult-test")
    ap.add_argument("--german")
    ap.add_argument("--out", default="data")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    if args.magic:
        write_libsvm(os.path.join(args.out, "magic04.gz"), build_magic(args.magic))
    if args.adult_train:
        paths = [args.adult_train] + ([args.adult_test] if args.adult_test else [])
        write_libsvm(os.path.join(args.out, "a9a.gz"), build_a9a(paths))
    if args.german:
        write_libsvm(os.path.join(args.out, "german.numer.gz"), build_german(args.german))


if __name__ == "__main__":
    main()
