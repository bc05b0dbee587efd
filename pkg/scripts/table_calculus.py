"""Compare the combination calculus with the stored combination rows and search for
scheme sets that give both autonomous revocation and delegation without key sharing."""
import argparse
import itertools

from proxypki.matrix import combine, diff_against_table, load_matrix


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-size", type=int, default=2, help="largest scheme set to search")
    args = ap.parse_args()
    m = load_matrix()
    print("combination\tmatching\tdeviations")
    for label in m.combinations:
        diff = diff_against_table(label, m)
        dev = ", ".join(f"{c}: predicted {p.label}, stored {s.label}" for c, p, s in diff) or "-"
        print(f"{label}\t{len(m.criteria) - len(diff)}/{len(m.criteria)}\t{dev}")
    print()
    print("schemes\tA4\tB2")
    for size in range(1, args.max_size + 1):
        for members in itertools.combinations(sorted(m.schemes), size):
            profile = combine(members, m)
            if all(profile.satisfies_requirements()):
                print(f"{'+'.join(members)}\t{profile['A4'].label}\t{profile['B2'].label}")


if __name__ == "__main__":
    main()
