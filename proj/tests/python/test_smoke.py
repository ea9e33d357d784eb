import math
import os
import subprocess

import numpy as np
import pytest

import encmap


def three_by_two():
    return encmap.EmbeddingMatrix("a", np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))


def test_spectrum_of_two_basis_rows():
    s = encmap.compute_spectrum(three_by_two())
    assert s.rank == 2
    np.testing.assert_allclose(s.eigenvalues, [0.5, 0.5], atol=1e-15)
    assert s.eigenvectors.shape == (3, 2)


def test_feature_vector_matches_hand_values():
    f = encmap.feature_vector(encmap.compute_spectrum(three_by_two()))
    third = 1.0 / 3.0
    expected = [third * math.log(2 / 3), third * math.log(2 / 3), third * (12 - math.log(3))]
    np.testing.assert_allclose(f.values, expected, rtol=1e-12)
    assert f.qre_total == pytest.approx(-math.log(3) - (2 / 3) * math.log(0.5) + 4, rel=1e-12)
    assert f.epsilon == encmap.DEFAULT_EPSILON == math.exp(-12)


def test_qre_against_numpy_matrix_logarithm():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((8, 3))
    b = rng.standard_normal((8, 5))
    rho = encmap.compute_spectrum(encmap.EmbeddingMatrix("r", a))
    sigma = encmap.compute_spectrum(encmap.EmbeddingMatrix("s", b))

    eps = encmap.DEFAULT_EPSILON
    rho_d = a @ a.T / np.trace(a @ a.T)
    u, mu = sigma.eigenvectors, sigma.eigenvalues
    sigma_d = u @ np.diag(mu) @ u.T + eps * (np.eye(8) - u @ u.T)
    w, v = np.linalg.eigh(sigma_d)
    log_sigma = v @ np.diag(np.log(w)) @ v.T
    lam = np.linalg.eigvalsh(rho_d)
    lam = lam[lam > 1e-14]
    expected = float(np.sum(lam * np.log(lam)) - np.trace(rho_d @ log_sigma))
    assert encmap.qre(rho, sigma) == pytest.approx(expected, abs=1e-8)


def test_distances_neighbours_and_tree():
    rng = np.random.default_rng(1)
    feats = [
        encmap.feature_vector(encmap.compute_spectrum(encmap.EmbeddingMatrix(f"e{i}", rng.standard_normal((10, 3)))))
        for i in range(5)
    ]
    d = encmap.pairwise_distances(feats)
    assert d.values.shape == (5, 5)
    assert d.values[0, 1] == pytest.approx(np.abs(feats[0].values - feats[1].values).sum(), abs=1e-12)
    nn = encmap.nearest_neighbors(d, "e0", 2)
    assert len(nn) == 2 and nn[0][1] <= nn[1][1]
    tree = encmap.hierarchical_cluster(d, "average")
    assert sorted(tree.leaf_order()) == [f"e{i}" for i in range(5)]
    assert tree.to_newick().endswith(";")
    layout = encmap.tsne(d, perplexity=1.5, iterations=100)
    assert layout.coords.shape == (5, 2)


def test_errors_carry_their_kind():
    with pytest.raises(encmap.EncmapError) as info:
        encmap.EmbeddingMatrix("bad", np.array([[np.nan]]))
    assert info.value.kind == "validation"
    with pytest.raises(encmap.EncmapError) as info:
        encmap.l2_normalize_rows(encmap.EmbeddingMatrix("z", np.zeros((1, 2))))
    assert info.value.kind == "degenerate-input"


def test_file_round_trip(tmp_path):
    m = encmap.EmbeddingMatrix("x", np.arange(6, dtype=float).reshape(3, 2))
    path = tmp_path / "x.emap"
    encmap.write_embedding_matrix(m, path)
    back = encmap.read_embedding_matrix(path)
    assert back.encoder_id == "x"
    np.testing.assert_array_equal(back.values, m.values)


def test_run_cli(tmp_path):
    assert encmap.run_cli(["synth", "--dim", "8", "--group", "0:1:2", "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "synth_g0_001.emap").exists()
    assert encmap.run_cli(["neighbors", "--k", "1"]) == 2


@pytest.mark.skipif("ENCMAP_CLI" not in os.environ, reason="command-line binary not provided")
def test_command_line_binary(tmp_path):
    exe = os.environ["ENCMAP_CLI"]
    done = subprocess.run([exe, "synth", "--dim", "6", "--output-dir", str(tmp_path)], capture_output=True)
    assert done.returncode == 0
    emaps = sorted(str(p) for p in tmp_path.glob("*.emap"))
    done = subprocess.run([exe, "features", *emaps, "--output-dir", str(tmp_path / "f")], capture_output=True)
    assert done.returncode == 0
    assert len(list((tmp_path / "f").glob("*.efvc"))) == 20
