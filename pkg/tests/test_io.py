import numpy as np
import pytest

from bmallows.augmentation import MISSING, PartialRanking, TieSet
from bmallows.dynamics import run_dynamic_chain, TimedData
from bmallows.io import (DataValidationError, complete_matrix, dump_json, load_labels,
                         load_potato, load_preferences, load_rank_matrix, load_timed_ranks,
                         read_augmented, read_header, read_preferences, read_samples, sha256,
                         write_augmented, write_rank_matrix, write_samples)
from bmallows.mixture import run_mixture_chain
from bmallows.partition import build_table
from bmallows.ranking import ItemCatalog, PreferenceCycleError, PreferencePair
from bmallows.sampler import Tuning, run_chain


def write(tmp_path, text, name="f.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestRankMatrix:
    def test_potato_bundled(self):
        data, cat, truth = load_potato("weighing")
        assert data.shape == (12, 20) and cat.n == 20
        assert np.all(np.sort(data, axis=1) == np.arange(1, 21))
        assert sorted(truth) == list(range(1, 21))
        vis, _, _ = load_potato("visual")
        assert vis.shape == (12, 20)

    def test_missing_and_fully_latent(self, tmp_path):
        parts, cat = load_rank_matrix(write(tmp_path, "a,b,c\n1,NA,2\nNA,NA,NA\n"))
        assert cat.labels == ("a", "b", "c")
        np.testing.assert_array_equal(parts[0].entries, [1, MISSING, 2])
        assert not parts[1].entries.any()
        assert complete_matrix(parts) is None

    def test_complete(self, tmp_path):
        parts, _ = load_rank_matrix(write(tmp_path, "a,b\n1,2\n2,1\n"))
        np.testing.assert_array_equal(complete_matrix(parts), [[1, 2], [2, 1]])

    @pytest.mark.parametrize("body, msg", [
        ("1,3,3\n", "row 1: rank 3 appears more than once"),
        ("1,2,3\n1,2.5,3\n", "row 2: non-integer rank '2.5'"),
        ("1,x,3\n", "non-numeric cell 'x'"),
        ("1,2\n", "row 1: expected 3 cells"),
        ("1,2,4\n", "rank 4 outside 1..3"),
    ])
    def test_errors_name_row_and_value(self, tmp_path, body, msg):
        with pytest.raises(DataValidationError, match=msg):
            load_rank_matrix(write(tmp_path, "a,b,c\n" + body))

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataValidationError):
            load_rank_matrix(write(tmp_path, ""))

    def test_write_round_trip(self, tmp_path):
        cat = ItemCatalog(("x", "y", "z"))
        p = tmp_path / "r.csv"
        write_rank_matrix(p, [[1, 0, 2], [3, 2, 1]], cat)
        parts, cat2 = load_rank_matrix(p)
        assert cat2 == cat
        np.testing.assert_array_equal([q.entries for q in parts], [[1, 0, 2], [3, 2, 1]])


class TestPreferences:
    def test_closure_example(self, tmp_path):
        p = write(tmp_path, "assessor_id,less_preferred,more_preferred\n"
                            "1,A1,A2\n1,A2,A5\n1,A4,A5\n")
        cat = ItemCatalog.default(5)
        sets = load_preferences(p, cat)
        assert len(sets) == 1 and len(sets[0]) == 4
        assert PreferencePair(cat["A1"], cat["A5"]) in sets[0]

    def test_labels_from_file(self, tmp_path):
        p = write(tmp_path, "assessor_id,less_preferred,more_preferred\n7,b,a\n8,c,b\n")
        sets, cat = read_preferences(p)
        assert cat.labels == ("a", "b", "c")
        assert [s.assessor for s in sets] == ["7", "8"]

    def test_empty_file(self, tmp_path):
        assert load_preferences(write(tmp_path, "")) == []

    def test_cycle(self, tmp_path):
        p = write(tmp_path, "assessor_id,less_preferred,more_preferred\n1,a,b\n1,b,a\n")
        with pytest.raises(PreferenceCycleError, match="assessor 1"):
            load_preferences(p)

    def test_unknown_item_and_bad_header(self, tmp_path):
        p = write(tmp_path, "assessor_id,less_preferred,more_preferred\n1,a,q\n")
        with pytest.raises(DataValidationError, match="row 1"):
            load_preferences(p, ItemCatalog(("a", "b")))
        with pytest.raises(DataValidationError, match="expected columns"):
            load_preferences(write(tmp_path, "x,y,z\n1,a,b\n"))


class TestTimed:
    def test_slices_ties_and_gaps(self, tmp_path):
        p = write(tmp_path, "t,a,b,c\n2,1,2,3\n0,2,1,3\n0,1,1,2\n2,NA,1,NA\n")
        data, cat = load_timed_ranks(p)
        assert cat.n == 3 and data.T == 2 and data.counts == (2, 0, 2)
        assert isinstance(data.slices[0][1], TieSet)
        assert data.slices[0][1].groups == ((0, 1), (2,))
        assert isinstance(data.slices[2][1], PartialRanking)

    def test_student_shape(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = [f"{t}," + ",".join(map(str, rng.permutation(4) + 1))
                for t, k in enumerate([5, 4, 8, 8]) for _ in range(k)]
        data, _ = load_timed_ranks(write(tmp_path, "t,m,p,c,b\n" + "\n".join(rows[::-1])))
        assert data.T == 3 and data.counts == (5, 4, 8, 8)

    @pytest.mark.parametrize("body, msg", [
        ("x,1,2\n", "not an integer"),
        ("-1,1,2\n", "negative time"),
        ("0,1,1\n", None),
    ])
    def test_errors(self, tmp_path, body, msg):
        p = write(tmp_path, "t,a,b\n" + body)
        if msg is None:
            load_timed_ranks(p)
        else:
            with pytest.raises(DataValidationError, match=msg):
                load_timed_ranks(p)

    def test_ties_with_missing_rejected(self, tmp_path):
        with pytest.raises(DataValidationError, match="ties and missing"):
            load_timed_ranks(write(tmp_path, "t,a,b,c\n0,1,1,NA\n"))

    def test_first_column_checked(self, tmp_path):
        with pytest.raises(DataValidationError, match="'t'"):
            load_timed_ranks(write(tmp_path, "a,b\n1,2\n"))


class TestSampleFiles:
    def check_round_trip(self, tmp_path, s, cat, fields):
        p = tmp_path / "s.txt"
        write_samples(p, s, cat, {"stream": 0})
        back, cat2 = read_samples(p)
        assert cat2 == cat and back.model == s.model
        assert back.tuning == s.tuning and back.priors == s.priors
        for f in fields:
            a, b = getattr(s, f), getattr(back, f)
            assert a.dtype == b.dtype
            np.testing.assert_array_equal(a, b)
        # second write is byte-identical
        q = tmp_path / "t.txt"
        write_samples(q, back, cat2, {"stream": 0})
        assert sha256(p) == sha256(q)
        assert read_header(p)["stream"] == 0

    def test_static(self, tmp_path):
        s = run_chain([[1, 2, 3], [2, 1, 3]], "footrule",
                      tuning=Tuning(iterations=500, burn_in=100),
                      table=build_table(3, "footrule"))
        self.check_round_trip(tmp_path, s, ItemCatalog.default(3),
                              ["alpha", "rho", "iteration"])

    def test_mixture(self, tmp_path):
        s = run_mixture_chain([[1, 2, 3], [3, 2, 1], [1, 3, 2]], 2, "kendall",
                              tuning=Tuning(iterations=500, burn_in=100),
                              table=build_table(3, "kendall"), corrected=True)
        self.check_round_trip(tmp_path, s, ItemCatalog(("x", "y", "z")),
                              ["alpha", "rho", "tau", "z", "iteration"])
        back, _ = read_samples(tmp_path / "s.txt")
        assert back.corrected and back.alpha_mode == s.alpha_mode

    def test_dynamic(self, tmp_path):
        s = run_dynamic_chain(TimedData([[[1, 2, 3]], [], [[2, 1, 3]]]), "footrule",
                              tuning=Tuning(iterations=500, burn_in=100),
                              table=build_table(3, "footrule"))
        self.check_round_trip(tmp_path, s, ItemCatalog.default(3),
                              ["alpha", "rho", "beta", "sigma2", "iteration"])

    def test_bad_model(self, tmp_path):
        p = write(tmp_path, '# labels=["a"]\n# metric="footrule"\n# model="odd"\n# n=1\n')
        with pytest.raises(DataValidationError, match="unknown model"):
            read_samples(p)

    def test_augmented(self, tmp_path):
        aug = np.array([[[1, 2, 3], [3, 1, 2]], [[2, 1, 3], [3, 2, 1]]])
        write_augmented(tmp_path / "a.txt", [10, 20], aug)
        it, back = read_augmented(tmp_path / "a.txt")
        np.testing.assert_array_equal(it, [10, 20])
        np.testing.assert_array_equal(back, aug)


class TestMisc:
    def test_labels(self, tmp_path):
        assert load_labels(write(tmp_path, "label\na\nb\n\n")) == ["a", "b"]

    def test_dump_json_sorted(self, tmp_path):
        dump_json(tmp_path / "x.json", {"b": 1, "a": [1, 2]})
        assert (tmp_path / "x.json").read_text().startswith('{\n  "a"')

    def test_potato_bad_name(self):
        with pytest.raises(ValueError):
            load_potato("tasting")
