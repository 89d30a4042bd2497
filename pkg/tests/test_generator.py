"""Focal selection, rigged-flow sampling, stepping, and full generation."""

import numpy as np
import pytest

from pocketflow.chem import Atom, Molecule, Pocket, Vocabulary, check_validity
from pocketflow.generator import (
    GenConfig,
    GenerationState,
    generate_coord,
    generate_ligand,
    generate_type,
    select_focal,
    step,
)
from pocketflow.model import Model, ModelConfig
from pocketflow.synthetic import toy_complex

VOCAB = Vocabulary.default()
C, O, N = VOCAB.index("C"), VOCAB.index("O"), VOCAB.index("N")


class ZeroRng:
    """Stand-in generator that always draws the zero latent."""

    def standard_normal(self, n):
        return np.zeros(n)


def small_model(seed=0, randomize_encoder=False):
    cfg = ModelConfig(
        vocab=VOCAB,
        rbf_centers=6,
        embed_width=8,
        hidden_width=8,
        encoder_layers=1,
        type_flow_layers=2,
        coord_flow_layers=2,
    )
    model = Model.initialized(cfg, np.random.default_rng(seed))
    if randomize_encoder:
        rng = np.random.default_rng(seed + 1)
        emb = model.store["encoder.embed"]
        emb[...] = rng.uniform(-0.2, 0.2, size=emb.shape)
    return model


def pocket_with_centroid_at_origin():
    return Pocket(
        [Atom(C, (1.0, 0, 0)), Atom(N, (-1.0, 0, 0))], np.array([10.0, 20.0])
    )


class TestSelectFocal:
    def test_initial_step_nearest_pocket_centroid(self):
        pocket = Pocket(
            [Atom(C, (4.0, 0, 0)), Atom(C, (1.0, 0, 0)), Atom(C, (-5.0, 0, 0))],
            np.array([1.0, 1.0, 1.0]),
        )
        state = GenerationState(pocket=pocket)
        assert select_focal(state) == 1  # centroid at x=0, atom at x=1 closest

    def test_single_open_atom(self):
        state = GenerationState(
            pocket=pocket_with_centroid_at_origin(),
            placed=[Atom(C, (3.0, 0, 0))],
            bonds=[],
            open_valences=[4],
        )
        assert select_focal(state) == 2

    def test_all_saturated_stops(self):
        state = GenerationState(
            pocket=pocket_with_centroid_at_origin(),
            placed=[Atom(C, (3.0, 0, 0)), Atom(O, (4.5, 0, 0))],
            bonds=[(0, 1, 1)],
            open_valences=[0, 0],
        )
        assert select_focal(state) is None

    def test_prefers_atom_nearer_centroid(self):
        state = GenerationState(
            pocket=pocket_with_centroid_at_origin(),
            placed=[Atom(C, (5.0, 0, 0)), Atom(C, (3.0, 0, 0))],
            bonds=[],
            open_valences=[4, 4],
        )
        assert select_focal(state) == 2 + 1

    def test_tie_breaks_to_lowest_index(self):
        state = GenerationState(
            pocket=pocket_with_centroid_at_origin(),
            placed=[Atom(C, (3.0, 0, 0)), Atom(C, (-3.0, 0, 0))],
            bonds=[],
            open_valences=[4, 4],
        )
        assert select_focal(state) == 2 + 0


class TestGenerateType:
    def test_dominating_shift_always_carbon(self):
        model = small_model(randomize_encoder=True)
        # layer 0 applies the identity permutation: a large shift on the C
        # component dominates any standard-normal draw
        model.store["typeflow.layer0.b"][len(VOCAB) + C] = 50.0
        entry = toy_complex(VOCAB)
        state = GenerationState(pocket=entry.pocket)
        focal = select_focal(state)
        rng = np.random.default_rng(0)
        draws = {generate_type(model, state, focal, rng) for _ in range(50)}
        assert draws == {C}

    def test_deterministic_per_seed(self):
        model = small_model()
        state = GenerationState(pocket=toy_complex(VOCAB).pocket)
        focal = select_focal(state)
        a = [generate_type(model, state, focal, np.random.default_rng(7)) for _ in range(3)]
        b = [generate_type(model, state, focal, np.random.default_rng(7)) for _ in range(3)]
        assert a == b

    def test_valence_mask_blocks_monovalent_when_one_slot_left(self):
        model = small_model()
        # force the argmax toward a monovalent element
        model.store["typeflow.layer0.b"][len(VOCAB) + VOCAB.index("F")] = 50.0
        pocket = pocket_with_centroid_at_origin()
        open_one = GenerationState(
            pocket=pocket, placed=[Atom(O, (3.0, 0, 0))], bonds=[], open_valences=[1]
        )
        rng = np.random.default_rng(1)
        masked = generate_type(model, open_one, 2, rng, valence_constrained=True)
        assert VOCAB[masked].max_valence > 1
        unmasked = generate_type(model, open_one, 2, np.random.default_rng(1), valence_constrained=False)
        assert unmasked == VOCAB.index("F")


class TestGenerateCoord:
    def test_zero_latent_lands_on_focal(self):
        model = small_model()
        entry = toy_complex(VOCAB)
        state = GenerationState(pocket=entry.pocket)
        focal = select_focal(state)
        out = generate_coord(model, state, focal, C, ZeroRng())
        assert np.allclose(out, entry.pocket.atoms[focal].position, atol=1e-10)

    def test_shift_only_flow_offsets_by_unit_x(self):
        model = small_model()
        model.store["coordflow.layer0.b"][3:] = [1.0, 0.0, 0.0]
        entry = toy_complex(VOCAB)
        state = GenerationState(pocket=entry.pocket)
        focal = select_focal(state)
        out = generate_coord(model, state, focal, C, ZeroRng())
        expected = entry.pocket.atoms[focal].position + np.array([1.0, 0.0, 0.0])
        assert np.allclose(out, expected, atol=1e-10)

    def test_same_seed_same_coordinate(self):
        model = small_model(randomize_encoder=True)
        state = GenerationState(pocket=toy_complex(VOCAB).pocket)
        focal = select_focal(state)
        a = generate_coord(model, state, focal, C, np.random.default_rng(3))
        b = generate_coord(model, state, focal, C, np.random.default_rng(3))
        assert np.array_equal(a, b)


class TestStep:
    def test_single_atom_budget(self):
        model = small_model()
        state = GenerationState(pocket=toy_complex(VOCAB).pocket)
        finished = step(model, state, np.random.default_rng(0), GenConfig(max_atoms=1))
        assert finished and state.t == 1

    def test_saturated_state_finishes_without_placement(self):
        model = small_model()
        state = GenerationState(
            pocket=pocket_with_centroid_at_origin(),
            placed=[Atom(O, (3.0, 0, 0))],
            bonds=[],
            open_valences=[0],
        )
        finished = step(model, state, np.random.default_rng(0), GenConfig(max_atoms=9))
        assert finished and state.t == 1

    def test_clash_exhaustion_emits_stop(self):
        model = small_model()
        # scales pinned at the softplus floor collapse every offset onto the
        # focal atom, so each attempt clashes and the step must give up
        for i in range(model.cfg.coord_flow_layers):
            model.store[f"coordflow.layer{i}.b"][:3] = -60.0
        state = GenerationState(pocket=toy_complex(VOCAB).pocket)
        finished = step(model, state, np.random.default_rng(0), GenConfig(max_atoms=4))
        assert finished and state.t == 0


class TestGenerateLigand:
    def test_deterministic_per_seed(self):
        model = small_model(randomize_encoder=True)
        pocket = toy_complex(VOCAB).pocket
        cfg = GenConfig(max_atoms=4)
        a = generate_ligand(model, pocket, cfg, np.random.default_rng(5))
        b = generate_ligand(model, pocket, cfg, np.random.default_rng(5))
        assert len(a) == len(b)
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.elements, b.elements)

    def test_seeds_differ_somewhere(self):
        model = small_model(randomize_encoder=True)
        pocket = toy_complex(VOCAB).pocket
        cfg = GenConfig(max_atoms=3)
        different = 0
        for s in range(20):
            a = generate_ligand(model, pocket, cfg, np.random.default_rng(s))
            b = generate_ligand(model, pocket, cfg, np.random.default_rng(1000 + s))
            if len(a) != len(b) or not np.array_equal(a.positions, b.positions):
                different += 1
        assert different >= 1

    def test_no_clashes_against_context(self):
        model = small_model(randomize_encoder=True)
        entry = toy_complex(VOCAB)
        cfg = GenConfig(max_atoms=5)
        for s in range(30):
            mol = generate_ligand(model, entry.pocket, cfg, np.random.default_rng(s))
            for atom in mol.atoms:
                r_new = VOCAB.radii[atom.element]
                d = np.linalg.norm(entry.pocket.positions - atom.position, axis=1)
                limits = 0.4 * (VOCAB.radii[entry.pocket.elements] + r_new)
                assert np.all(d >= limits)
            report = check_validity(mol, VOCAB)
            # clash violations are impossible by construction
            assert not any("clash" in reason for _, reason in report.violations)

    def test_context_grows_by_one_per_step(self):
        model = small_model()
        state = GenerationState(pocket=toy_complex(VOCAB).pocket)
        rng = np.random.default_rng(2)
        cfg = GenConfig(max_atoms=4)
        sizes = [state.t]
        while not step(model, state, rng, cfg):
            sizes.append(state.t)
        assert sizes == list(range(len(sizes)))

    def test_empty_pocket_rejected(self):
        model = small_model()
        with pytest.raises(ValueError):
            generate_ligand(
                model, Pocket([], np.array([])), GenConfig(), np.random.default_rng(0)
            )

    def test_molecule_state_invariant(self):
        state = GenerationState(pocket=toy_complex(VOCAB).pocket)
        assert isinstance(state.molecule(), Molecule)
        assert state.molecule().atoms == []

    def test_valence_constrained_keeps_total_open_nonnegative(self):
        # rig the type flow to always pick carbon, the worst case for bond
        # accumulation, and watch the open-valence total after every step
        model = small_model(randomize_encoder=True)
        model.store["typeflow.layer0.b"][len(VOCAB) + C] = 50.0
        pocket = toy_complex(VOCAB).pocket
        cfg = GenConfig(max_atoms=6, valence_constrained=True)
        for seed in range(40):
            state = GenerationState(pocket=pocket)
            rng = np.random.default_rng(seed)
            while True:
                finished = step(model, state, rng, cfg)
                if state.t:
                    assert sum(state.open_valences) >= 0
                if finished:
                    break
