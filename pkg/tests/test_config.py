import json

import numpy as np
import pytest

from latticejump.config import (
    build_operators,
    compile_columns,
    initial_state,
    load_config,
    parse_config,
)
from latticejump.errors import ConfigError
from latticejump.observables import variance_of
from latticejump.probe import build_D


def base_config(**overrides):
    cfg = {
        "model": {"species": "boson", "L": 4, "N": 2, "J": 1.0, "U": 1.0,
                  "boundary": "open"},
        "probe": {"kind": "odd_sites", "gamma": 0.5, "channels": ["d"]},
        "engine": {"seed": 11, "n_traj": 2, "t_final": 1.0, "sample_interval": 0.5},
        "init": {"state": "ground_state"},
        "observables": ["density"],
        "output": {"directory": "runs/t"},
    }
    cfg.update(overrides)
    return cfg


def test_minimal_config_parses_and_hashes_stably():
    cfg = parse_config(base_config())
    assert cfg.model.L == 4 and cfg.gamma == 0.5
    # hash ignores the output section and materializes defaults
    other = base_config(output={"directory": "somewhere/else"})
    assert parse_config(other).config_hash() == cfg.config_hash()
    changed = base_config()
    changed["probe"] = {"kind": "odd_sites", "gamma": 0.6, "channels": ["d"]}
    assert parse_config(changed).config_hash() != cfg.config_hash()


def test_canonical_config_round_trips():
    cfg = parse_config(base_config())
    stored = dict(cfg.canonical)
    assert stored["schema_version"] == 1
    stored["output"] = {"directory": "runs/again"}
    again = parse_config(stored)
    assert again.config_hash() == cfg.config_hash()
    bad = dict(stored)
    bad["schema_version"] = 99
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config(bad)


def test_required_sections_and_keys():
    for missing in ("model", "probe", "engine", "init", "output"):
        broken = base_config()
        del broken[missing]
        with pytest.raises(ConfigError, match=missing):
            parse_config(broken)
    with pytest.raises(ConfigError, match="seed"):
        parse_config(base_config(engine={"t_final": 1.0}))
    with pytest.raises(ConfigError, match="unknown keys"):
        parse_config(base_config(model={"species": "boson", "L": 4, "N": 2,
                                        "typo": 1}))


def test_species_filling_validation():
    with pytest.raises(ConfigError, match="N_up"):
        parse_config(base_config(model={"species": "boson", "L": 4, "N": 2,
                                        "N_up": 1}))
    with pytest.raises(ConfigError, match="N_up and N_down"):
        parse_config(base_config(model={"species": "fermion", "L": 4, "N": 2}))
    fermion = base_config(
        model={"species": "fermion", "L": 4, "N_up": 1, "N_down": 1},
        init={"state": "fock", "up": [1, 0, 0, 0], "down": [0, 1, 0, 0]},
    )
    cfg = parse_config(fermion)
    assert cfg.model.filling == (1, 1)


def test_coefficient_length_message_names_both_lengths():
    bad = base_config(probe={"kind": "custom_diagonal", "coefficients": [1, 2],
                             "gamma": 1.0})
    with pytest.raises(ConfigError, match=r"2 coefficients for a chain of 4 sites"):
        parse_config(bad)


def test_gamma_and_cavity_are_mutually_exclusive():
    with pytest.raises(ConfigError, match="not both or neither"):
        parse_config(base_config(probe={"kind": "odd_sites", "gamma": 1.0,
                                        "kappa": 1.0}))
    with pytest.raises(ConfigError, match="not both or neither"):
        parse_config(base_config(probe={"kind": "odd_sites"}))
    with pytest.raises(ConfigError, match="missing"):
        parse_config(base_config(probe={"kind": "odd_sites", "kappa": 1.0}))
    cavity = base_config(probe={"kind": "odd_sites", "omega10": 1.0, "a0": 1.0,
                                "delta_p": 1.0, "kappa": 1.0})
    cfg = parse_config(cavity)
    assert np.isclose(cfg.c_coeff, 0.5 - 0.5j)
    assert np.isclose(cfg.gamma, 0.5)


def test_channel_species_rules():
    with pytest.raises(ConfigError, match="fermionic"):
        parse_config(base_config(probe={"kind": "odd_sites", "gamma": 1.0,
                                        "channels": ["dx"]}))
    with pytest.raises(ConfigError, match="fermion_dual"):
        parse_config(base_config(
            model={"species": "fermion", "L": 4, "N_up": 1, "N_down": 1},
            probe={"kind": "odd_sites", "gamma": 1.0, "channels": ["dx", "dy"]},
            init={"state": "fock", "up": [1, 0, 0, 0], "down": [0, 1, 0, 0]},
        ))


def test_fock_init_validation_and_state():
    cfg = parse_config(base_config(init={"state": "fock", "occupations": [0, 1, 1, 0]}))
    basis, h0, _ = build_operators(cfg)
    psi = initial_state(cfg, basis, h0)
    assert psi[basis.index[(0, 1, 1, 0)]] == 1.0
    assert np.isclose(np.linalg.norm(psi), 1.0)
    with pytest.raises(ConfigError, match="sum to 3"):
        parse_config(base_config(init={"state": "fock", "occupations": [1, 1, 1, 0]}))
    with pytest.raises(ConfigError, match="4 sites"):
        parse_config(base_config(init={"state": "fock", "occupations": [1, 1]}))


def test_file_init_roundtrip(tmp_path):
    cfg0 = parse_config(base_config())
    basis, h0, _ = build_operators(cfg0)
    rng = np.random.default_rng(0)
    vec = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    path = tmp_path / "psi.npy"
    np.save(path, vec)
    cfg = parse_config(base_config(init={"state": "file", "path": str(path)}))
    psi = initial_state(cfg, basis, h0)
    assert np.isclose(np.linalg.norm(psi), 1.0)
    assert np.allclose(psi, vec / np.linalg.norm(vec))
    np.save(path, vec[:3])
    with pytest.raises(ConfigError, match="shape"):
        initial_state(cfg, basis, h0)


def test_load_config_reports_json_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "model": nope\n}')
    with pytest.raises(ConfigError, match=r"line 2, column 12"):
        load_config(path)


def test_columns_match_direct_evaluation():
    cfg = parse_config(base_config(
        observables=["density", "imbalance", "variance:d", "correlation:1:4",
                     "entropy:2", "distribution:odd_even:0", "numbers:odd_even"],
    ))
    basis, h0, _ = build_operators(cfg)
    cols = compile_columns(cfg, basis)
    names = [c.name for c in cols]
    assert names[:4] == ["n_1", "n_2", "n_3", "n_4"]
    assert "P_odd_0" in names and "N_even" in names
    rng = np.random.default_rng(5)
    psi = rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    by_name = {c.name: c for c in cols}
    for c in cols:
        assert np.isclose(c.from_state(psi), c.from_density(rho), atol=1e-12), c.name
    # distribution columns are a probability vector
    dist = [by_name[f"P_odd_{k}"].from_state(psi) for k in range(3)]
    assert np.isclose(sum(dist), 1.0)
    # variance column agrees with the library evaluator
    var = variance_of(build_D(basis, cfg.geometry))(psi)
    assert np.isclose(by_name["var_d"].from_state(psi), var)
    # densities sum to the particle number
    assert np.isclose(sum(by_name[f"n_{j}"].from_state(psi) for j in (1, 2, 3, 4)), 2.0)


def test_unknown_observable_errors():
    with pytest.raises(ConfigError, match="not recognized"):
        cfg = parse_config(base_config(observables=["wigner"]))
        compile_columns(cfg, *build_operators(cfg)[:1])
    with pytest.raises(ConfigError, match="distinct sites"):
        cfg = parse_config(base_config(observables=["correlation:1:1"]))
        compile_columns(cfg, *build_operators(cfg)[:1])
    with pytest.raises(ConfigError, match="prefix length"):
        cfg = parse_config(base_config(observables=["entropy:4"]))
        compile_columns(cfg, *build_operators(cfg)[:1])
    with pytest.raises(ConfigError, match="requested twice"):
        parse_config(base_config(observables=["density", "density"]))


def test_intersite_uniform_resolves_against_boundary():
    cfg = parse_config(base_config(
        model={"species": "boson", "L": 4, "N": 2, "boundary": "periodic"},
        probe={"kind": "intersite", "channels": ["b"], "gamma": 1.0},
    ))
    bonds = cfg.geometry.bond_matrix(4)
    assert bonds[3, 0] == 1.0  # wrap bond present on the ring
    assert bonds[0, 1] == bonds[1, 0] == 1.0


def test_intersite_profile_file(tmp_path):
    path = tmp_path / "bonds.txt"
    path.write_text("1 2 1.0 0.0\n2 1 1.0 0.0\n")
    cfg = parse_config(base_config(
        probe={"kind": "intersite", "file": str(path), "channels": ["b"],
               "gamma": 1.0},
    ))
    bonds = cfg.geometry.bond_matrix(4)
    assert bonds[0, 1] == 1.0 and bonds[2, 3] == 0.0


def test_canonical_embeds_loaded_coefficients(tmp_path):
    path = tmp_path / "coeffs.txt"
    path.write_text("0 0\n-1 0\n1 0\n0 0\n")
    via_file = parse_config(base_config(
        probe={"kind": "custom_diagonal", "file": str(path), "gamma": 1.0},
    ))
    inline = parse_config(base_config(
        probe={"kind": "custom_diagonal", "coefficients": [0, -1, 1, 0],
               "gamma": 1.0},
    ))
    assert via_file.config_hash() == inline.config_hash()


def test_json_file_loading(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(base_config()))
    cfg = load_config(path)
    assert cfg.engine.seed == 11
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "absent.json")
