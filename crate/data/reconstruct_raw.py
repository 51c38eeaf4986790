"""Rebuild UCI-format raw files from copies that ship inside Python packages.

Use this when archive.ics.uci.edu is unreachable. Every output file has the
exact layout of its UCI original, so `randcloud fetch-data --raw-dir` can
convert it like a fresh download.

Sources (download the wheels with `pip download --no-deps <name>==<version>`):
  scikit-learn (installed)   iris, wine, breast_cancer (WDBC), digits
  keel-ds==0.2.5 wheel       sonar, ionosphere, optdigits training rows
  responsibly==0.1.2 wheel   adult.data, adult.test (byte-identical copies)

Usage: python3 reconstruct_raw.py OUT_DIR KEEL_WHEEL RESPONSIBLY_WHEEL
"""

import csv
import gzip
import io
import os
import sys
import zipfile

import sklearn.datasets

SK = os.path.join(os.path.dirname(sklearn.datasets.__file__), "data")


def sk_rows(name):
    with open(os.path.join(SK, name)) as f:
        rows = list(csv.reader(f))
    return rows[1:]


def keel_rows(wheel, stem):
    z = zipfile.ZipFile(wheel)
    member = next(n for n in z.namelist() if n.endswith("/" + stem + ".dat") or n.endswith(stem + ".dat"))
    text = z.read(member).decode()
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        out.append([v.strip() for v in line.split(",")])
    return out


def write(path, lines):
    with open(path, "w", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def main(out, keel, responsibly):
    os.makedirs(out, exist_ok=True)

    species = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]
    write(f"{out}/iris.data", [",".join(r[:4] + [species[int(r[4])]]) for r in sk_rows("iris.csv")])

    write(f"{out}/wine.data", [",".join([str(int(r[13]) + 1)] + r[:13]) for r in sk_rows("wine_data.csv")])

    # scikit-learn codes malignant as 0. The sample ids are not shipped, so
    # the row number stands in for them.
    write(
        f"{out}/wdbc.data",
        [",".join([str(i + 1), "M" if r[30] == "0" else "B"] + r[:30]) for i, r in enumerate(sk_rows("breast_cancer.csv"))],
    )

    write(f"{out}/sonar.all-data", [",".join(r) for r in keel_rows(keel, "sonar")])

    # KEEL drops the second attribute, which is constant zero in the original.
    write(f"{out}/ionosphere.data", [",".join([r[0], "0"] + r[1:]) for r in keel_rows(keel, "ionosphere")])

    # KEEL concatenates optdigits.tra (3823 rows) and optdigits.tes (1797 rows);
    # the latter is also scikit-learn's digits set, which this checks.
    digits = keel_rows(keel, "optdigits")
    assert len(digits) == 5620, len(digits)
    with gzip.open(os.path.join(SK, "digits.csv.gz"), "rt") as f:
        sk_digits = [[str(int(float(v))) for v in r] for r in csv.reader(f)]
    assert digits[3823:] == sk_digits, "test rows differ from scikit-learn digits"
    write(f"{out}/optdigits.tra", [",".join(r) for r in digits[:3823]])
    write(f"{out}/optdigits.tes", [",".join(r) for r in digits[3823:]])

    z = zipfile.ZipFile(responsibly)
    for name in ["adult.data", "adult.test"]:
        with open(f"{out}/{name}", "wb") as f:
            f.write(z.read(f"responsibly/dataset/adult/{name}"))


if __name__ == "__main__":
    if len(sys.argv) != 4:
        raise SystemExit(__doc__)
    main(*sys.argv[1:])
