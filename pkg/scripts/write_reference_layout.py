"""Write the built-in 24-taxel layout and its fitted ellipsoid."""

import argparse
from pathlib import Path

from tactileflow import io
from tactileflow.geometry import fit_ellipsoid, reference_layout


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", type=Path)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    lay = reference_layout()
    io.write_layout(args.out / "layout.txt", lay, comment="built-in synthetic layout")
    print(fit_ellipsoid(lay.positions))


if __name__ == "__main__":
    main()
