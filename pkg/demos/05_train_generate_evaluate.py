"""The full desk-scale pipeline: train on noisy toy complexes, generate
ligands into the pocket, and score them.

Uses a reduced epoch budget so the script finishes in well under a minute;
the acceptance suite runs the full-strength version of the same experiment.
"""

import numpy as np

from pocketflow import GenConfig, ModelConfig, TrainConfig, Vocabulary, check_validity
from pocketflow.evaluator import AffinityModel, evaluate_set, report_tsv
from pocketflow.generator import generate_ligand
from pocketflow.synthetic import toy_complex, toy_dataset
from pocketflow.trainer import train

vocab = Vocabulary.default()

# 50 noisy copies of a 3-atom ligand (C-C-O) posed next to a 5-atom pocket.
dataset = toy_dataset(vocab, n_copies=50, noise=0.1, seed=7)
print(f"Training set: {len(dataset)} complexes, "
      f"{len(dataset[0].pocket)} pocket atoms, {len(dataset[0].ligand)} ligand atoms each")

model_cfg = ModelConfig(vocab=vocab)
train_cfg = TrainConfig(epochs=400, learning_rate=1e-3, seed=0)
result = train(dataset, model_cfg, train_cfg)
history = result.history
print(f"NLL: epoch 1 = {history[0]:.3f}  epoch 200 = {history[199]:.3f}  "
      f"epoch {len(history)} = {history[-1]:.3f}")

# Generate ligands into the clean pocket. Every accepted atom is clash-free
# against the whole context by construction.
entry = toy_complex(vocab)
gen_cfg = GenConfig(max_atoms=6, valence_constrained=True)
molecules = [
    generate_ligand(result.model, entry.pocket, gen_cfg, np.random.default_rng(seed))
    for seed in range(12)
]
for i, mol in enumerate(molecules[:4]):
    symbols = "".join(vocab[e].symbol for e in mol.elements)
    print(f"  molecule {i}: {len(mol)} atoms ({symbols}), "
          f"valid={check_validity(mol, vocab).valid}")

# Score the batch: validity fraction, RMSD against the reference ligand
# (only for size-matched molecules), and the contact-based affinity proxy.
report = evaluate_set(
    molecules,
    entry.pocket,
    AffinityModel(),
    vocab,
    reference=entry.ligand,
)
print("\nEvaluation report:")
print(report_tsv(report))
