import numpy as np
import pytest

from specrecon.errors import (
    IndexOutOfRangeError,
    NegativeEigenvalueError,
    NotSymmetricError,
    ShapeMismatchError,
    UnknownStatisticError,
)
from specrecon.lab import (
    DataMatrix,
    ExperimentShape,
    GroundTruthModel,
    eigh_descending,
    gen_data_matrix,
    mc_ensemble,
    perturbation_column,
    restricted_covariance_spectrum,
    sample_covariance,
    sym_eigen,
    trial_rng,
)
from specrecon.spectrum import SpectrumRole, interlaces


class TestExperimentShape:
    def test_ratio(self):
        assert ExperimentShape(p=100, n=200).c == 2.0

    def test_from_ratio_rounds(self):
        assert ExperimentShape.from_ratio(p=3, c=2.5).n == 8

    def test_positive_required(self):
        with pytest.raises(ValueError):
            ExperimentShape(p=0, n=5)


class TestGroundTruthModel:
    def test_identity(self):
        assert np.array_equal(GroundTruthModel.identity().realize(4).values, np.ones(4))

    def test_linear_span(self):
        s = GroundTruthModel.linear(1, 10).realize(10)
        assert s[0] == 10.0 and s[9] == 1.0
        assert np.all(np.diff(s.values) < 0)

    def test_geometric_span(self):
        s = GroundTruthModel.geometric(1, 16).realize(5)
        assert s[0] == pytest.approx(16.0) and s[4] == pytest.approx(1.0)
        assert s[2] == pytest.approx(4.0)

    def test_two_cluster(self):
        s = GroundTruthModel.two_cluster(4.0, 1.0, 0.25).realize(8)
        assert list(s.values) == [4.0, 4.0] + [1.0] * 6

    def test_explicit_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            GroundTruthModel.explicit([1.0, 2.0]).realize(3)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            GroundTruthModel.explicit([1.0, 0.0]).realize(2)


class TestDataGeneration:
    def test_shape(self):
        x = gen_data_matrix(ExperimentShape(p=5, n=11), GroundTruthModel.identity())
        assert x.entries.shape == (11, 5)

    def test_determinism_by_key(self):
        shape = ExperimentShape(p=4, n=6, master_seed=7)
        a = gen_data_matrix(shape, GroundTruthModel.identity(), trial=3)
        b = gen_data_matrix(shape, GroundTruthModel.identity(), trial=3)
        assert np.array_equal(a.entries, b.entries)

    def test_trials_differ(self):
        shape = ExperimentShape(p=4, n=6, master_seed=7)
        a = gen_data_matrix(shape, GroundTruthModel.identity(), trial=0)
        b = gen_data_matrix(shape, GroundTruthModel.identity(), trial=1)
        assert not np.array_equal(a.entries, b.entries)

    def test_trial_rng_independent_of_order(self):
        # stream 5 must not depend on whether stream 4 was drawn first
        before = trial_rng(0, 5).standard_normal(3)
        trial_rng(0, 4).standard_normal(1000)
        after = trial_rng(0, 5).standard_normal(3)
        assert np.array_equal(before, after)

    def test_column_variances_scale(self):
        shape = ExperimentShape(p=3, n=200_000, master_seed=1)
        x = gen_data_matrix(shape, GroundTruthModel.explicit([9.0, 4.0, 1.0]))
        var = x.entries.var(axis=0)
        assert np.allclose(var, [9.0, 4.0, 1.0], rtol=0.03)

    def test_binary_round_trip(self):
        shape = ExperimentShape(p=3, n=4)
        x = gen_data_matrix(shape, GroundTruthModel.identity())
        back = DataMatrix.from_bytes(x.to_bytes())
        assert np.array_equal(back.entries, x.entries)
        assert back.n == 4 and back.p == 3

    def test_binary_magic_checked(self):
        with pytest.raises(ValueError):
            DataMatrix.from_bytes(b"XXXX" + b"\x00" * 20)


class TestEigen:
    def test_sample_covariance_symmetric_psd(self):
        x = gen_data_matrix(ExperimentShape(p=6, n=9), GroundTruthModel.identity())
        s = sample_covariance(x)
        assert np.array_equal(s, s.T)
        assert np.min(np.linalg.eigvalsh(s)) > -1e-12

    def test_sym_eigen_reconstructs(self):
        rng = np.random.default_rng(0)
        b = rng.standard_normal((8, 8))
        m = b @ b.T  # PSD by construction
        spec, v = sym_eigen(m, want_basis=True)
        assert np.allclose(v @ np.diag(spec.values) @ v.T, m, atol=1e-10)

    def test_sym_eigen_rejects_asymmetric(self):
        with pytest.raises(NotSymmetricError):
            sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_sym_eigen_rejects_indefinite(self):
        with pytest.raises(NegativeEigenvalueError):
            sym_eigen(np.diag([1.0, -1.0]))

    def test_eigh_descending_allows_indefinite(self):
        w, _ = eigh_descending(np.diag([1.0, -1.0]))
        assert list(w) == [1.0, -1.0]

    def test_rank_deficient_when_n_below_p(self):
        x = gen_data_matrix(ExperimentShape(p=10, n=4), GroundTruthModel.identity())
        spec = sym_eigen(sample_covariance(x))
        assert np.sum(spec.values < 1e-10) == 6


class TestPerturbationColumn:
    def test_restricted_interlaces(self):
        x = gen_data_matrix(ExperimentShape(p=12, n=30, master_seed=3), GroundTruthModel.linear(1, 5))
        full = sym_eigen(sample_covariance(x))
        res = restricted_covariance_spectrum(x, 4)
        assert res.p == 11
        assert interlaces(full, res)

    def test_column_rotation_preserves_norm(self):
        x = gen_data_matrix(ExperimentShape(p=8, n=20, master_seed=5), GroundTruthModel.identity())
        s = sample_covariance(x)
        col = perturbation_column(x, 2)
        keep = np.arange(8) != 2
        assert np.linalg.norm(col.off_entries) == pytest.approx(np.linalg.norm(s[keep, 2]))
        assert col.diag_entry == pytest.approx(s[2, 2])

    def test_bad_index(self):
        x = gen_data_matrix(ExperimentShape(p=4, n=6), GroundTruthModel.identity())
        with pytest.raises(IndexOutOfRangeError):
            perturbation_column(x, 4)


class TestEnsemble:
    def test_trace_statistic_mean(self):
        shape = ExperimentShape(p=10, n=50, master_seed=2)
        rec = mc_ensemble(shape, GroundTruthModel.identity(), trials=200, statistic="trace")
        # E[trace] = sum of variances = p
        assert rec.mean[0] == pytest.approx(10.0, rel=0.05)
        assert rec.trials == 200

    def test_unknown_statistic(self):
        shape = ExperimentShape(p=4, n=8)
        with pytest.raises(UnknownStatisticError):
            mc_ensemble(shape, GroundTruthModel.identity(), trials=2, statistic="nope")

    def test_json_record(self):
        import json

        shape = ExperimentShape(p=4, n=8, master_seed=9)
        rec = mc_ensemble(shape, GroundTruthModel.identity(), trials=3)
        doc = json.loads(rec.to_json())
        assert doc["config"]["p"] == 4
        assert doc["trials"] == 3
        assert "0.5" in doc["statistics"]["quantiles"]
