"""Configuration parsing and validation."""

import numpy as np
import pytest

from mgtlab import ConfigError
from mgtlab.config import TOLERANCE_DEFAULTS, RunConfig, default_config, load_config, parse_config

MINIMAL = """
alpha = 1.0
c = 1.0
delta = 1.0
tau = 0.1
t_final = 5.0

[basis]
n_modes = 16
"""


def violations(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.violations


class TestValid:
    def test_minimal(self):
        cfg = parse_config(MINIMAL)
        assert isinstance(cfg, RunConfig)
        assert (cfg.alpha, cfg.c, cfg.delta, cfg.tau, cfg.t_final) == (1.0, 1.0, 1.0, 0.1, 5.0)
        assert cfg.basis.n_modes == 16
        assert cfg.taus() == (0.1,)
        assert cfg.tolerances == TOLERANCE_DEFAULTS
        assert cfg.params().tau == 0.1

    def test_defaults(self):
        cfg = default_config()
        assert cfg.basis.n_modes == 64 and cfg.data_class == "h2" and cfg.seed == 0
        assert cfg.taus() == ()

    def test_full(self):
        cfg = parse_config("""
alpha = 0.5
tau_grid = [0.1, 0.01, 0.001]
preparation = "zero_u2"
output_dir = "out"
[basis]
kind = "explicit"
mus = [1.0, 4.0]
[data]
class = "explicit"
u0 = [1.0, 0.0]
u1 = [0.0, 2.0]
[tolerances]
slope_hi = 1.3
[check]
criteria = [3, 1, 3]
perturb_energy = 0.001
[decay]
window = [5, 15]
""")
        assert cfg.tau_grid == (0.1, 0.01, 0.001)
        np.testing.assert_array_equal(cfg.basis.mus, [1.0, 4.0])
        assert cfg.explicit_state2().coeffs.tolist() == [[1.0, 0.0], [0.0, 2.0]]
        assert cfg.explicit_state3().coeffs[:, 2].tolist() == [0.0, 0.0]
        assert cfg.tolerances["slope_hi"] == 1.3 and cfg.tolerances["slope_lo"] == 0.8
        assert cfg.check_criteria == (1, 3)
        assert cfg.perturb_energy == 0.001
        assert cfg.decay_window == (5.0, 15.0)
        assert cfg.output_dir == "out"

    def test_with_seed(self):
        cfg = parse_config(MINIMAL + "[data]\nseed = 4\n")
        assert cfg.seed == 4
        assert cfg.with_seed(None) is cfg
        assert cfg.with_seed(9).seed == 9 and cfg.seed == 4

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_text(MINIMAL, encoding="utf-8")
        assert load_config(path).basis.n_modes == 16

    def test_load_rejects_bad_encoding(self, tmp_path):
        path = tmp_path / "run.toml"
        path.write_bytes(b"alpha = \xff\n")
        with pytest.raises(ConfigError, match="UTF-8"):
            load_config(path)


class TestRejected:
    def test_negative_n_modes(self):
        assert violations(MINIMAL.replace("n_modes = 16", "n_modes = -3")) == [
            "basis.n_modes must be a positive integer, got -3"
        ]

    def test_all_violations_reported(self):
        errs = violations("foo = 1\nalpha = 0.5\ntau = 2.0\n[basis]\nn_modes = -3\n")
        assert errs == [
            "unknown key 'foo'",
            "basis.n_modes must be a positive integer, got -3",
            "gamma_tau nonpositive at tau=2.0 (tau_max=1.0)",
        ]
        assert "; " in str(ConfigError(errs))

    def test_gamma_nonpositive(self):
        errs = violations("alpha = 0.5\ntau = 1.5\n")
        assert len(errs) == 1 and errs[0].startswith("gamma_tau nonpositive")

    def test_tau_grid_checked_per_value(self):
        errs = violations("alpha = 0.5\ntau_grid = [3.0, 2.0, 0.1]\n")
        assert [e.split(" (")[0] for e in errs] == [
            "gamma_tau nonpositive at tau=3.0",
            "gamma_tau nonpositive at tau=2.0",
        ]

    def test_conservative_needs_opt_in(self):
        text = "alpha = 0.5\ntau = 1.0\n"
        assert violations(text)[0].startswith("gamma_tau nonpositive")
        cfg = parse_config(text + "allow_conservative = true\n")
        assert cfg.params().gamma_tau == 0.0

    def test_syntax_error_location(self):
        errs = violations("alpha = 1.0\nc = = 2\n")
        assert len(errs) == 1
        assert errs[0].startswith("syntax error at line 2, column")

    @pytest.mark.parametrize(
        "text,fragment",
        [
            ("alpha = -1\n", "alpha must be a positive number"),
            ("c = 'x'\n", "c must be a positive number"),
            ("tau = 0.1\ntau_grid = [0.1, 0.01, 0.001]\n", "either tau or tau_grid"),
            ("tau_grid = [0.01, 0.1, 0.001]\n", "strictly decreasing"),
            ("tau_grid = []\n", "nonempty list"),
            ("t_final = 0\n", "t_final must be a positive number"),
            ("early_samples = -1\n", "early_samples"),
            ("preparation = 'hot'\n", "preparation must be one of"),
            ("allow_conservative = 1\n", "true or false"),
            ("[basis]\nkind = 'torus'\n", "basis.kind"),
            ("[basis]\nmus = [1.0]\n", "only valid with kind = 'explicit'"),
            ("[basis]\nkind = 'explicit'\nmus = [1.0, 0.5]\n", "basis.mus"),
            ("[data]\nclass = 'h7'\n", "data.class"),
            ("[data]\nseed = -2\n", "data.seed"),
            ("[data]\nu0 = [1.0]\n", "only valid with class = 'explicit'"),
            ("[data]\nclass = 'explicit'\n", "at least one of"),
            ("[basis]\nn_modes = 2\n[data]\nclass = 'explicit'\nu0 = [1.0]\n", "has 1 entries"),
            ("[tolerances]\nslope_lo = 2.0\n", "slope_lo must be below"),
            ("[tolerances]\nwobble = 1.0\n", "unknown key tolerances.'wobble'"),
            ("[check]\ncriteria = [0, 15]\n", "check.criteria"),
            ("[decay]\nwindow = [3, 1]\n", "decay.window"),
            ("basis = 3\n", "basis must be a table"),
        ],
    )
    def test_single_violation(self, text, fragment):
        errs = violations(text)
        assert any(fragment in e for e in errs), errs
