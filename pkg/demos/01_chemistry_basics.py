"""Element vocabulary, distance-based bonds, and validity checking.

Walks through the chemistry layer: what the built-in element table knows,
how bonds are inferred from covalent-radius windows, and what makes a
molecule count as chemically valid.
"""

import numpy as np

from pocketflow import Atom, Molecule, Vocabulary, check_validity, infer_bonds, open_valence

vocab = Vocabulary.default()

print("Element table (symbol, covalent radius / A, max valence):")
for kind in vocab.elements:
    print(f"  {kind.symbol:>2s}  r={kind.covalent_radius:.2f}  valence={kind.max_valence}")

# A pair of carbons at a typical single-bond distance. The bond window for
# C-C is [0.4*(0.77+0.77), 0.77+0.77+0.45] = [0.616, 1.99] A.
C = vocab.index("C")
H = vocab.index("H")
pair = [Atom(C, (0.0, 0.0, 0.0)), Atom(C, (1.54, 0.0, 0.0))]
print("\nC-C at 1.54 A infers bonds:", infer_bonds(pair, vocab))

# Methane: a carbon with four tetrahedral hydrogens at 1.09 A.
r = 1.09 / np.sqrt(3.0)
corners = [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
atoms = [Atom(C, (0, 0, 0))] + [Atom(H, np.array(c) * r) for c in corners]
methane = Molecule(atoms, infer_bonds(atoms, vocab))
print("\nMethane bonds:", methane.bonds)
print("Open valence of the carbon:", open_valence(methane, 0, vocab))
print("Validity:", check_validity(methane, vocab))

# Exceeding the valence capacity is reported, not raised: a carbon with five
# hydrogens in bonding range is flagged at the offending atom.
atoms5 = [Atom(C, (0, 0, 0)), Atom(H, (0, 0, 1.09)), Atom(H, (0, 0, -1.09))]
for k in range(3):
    angle = 2 * np.pi * k / 3
    atoms5.append(Atom(H, (1.09 * np.cos(angle), 1.09 * np.sin(angle), 0.0)))
crowded = Molecule(atoms5, infer_bonds(atoms5, vocab))
report = check_validity(crowded, vocab)
print("\nFive-coordinate carbon is valid?", report.valid)
for index, reason in report.violations:
    print(f"  atom {index}: {reason}")

# Disconnected fragments are not one molecule.
split = Molecule([Atom(C, (0, 0, 0)), Atom(C, (9.0, 0, 0))], [])
print("\nTwo distant carbons:", check_validity(split, vocab).violations)
