"""Named figure-reproduction recipes.

Every recipe is a set of labelled run configurations (times in native
units; the absorber figures plot ``tau = 2t``).  ``oracle`` marks recipes
whose first variant has an exact reference.
"""

from dataclasses import dataclass, field

from .config import RunConfig, validate

INV_SQRT2 = 0.7071067811865476


@dataclass(frozen=True)
class Recipe:
    name: str
    description: str
    variants: dict
    kind: str = "simulate"          # or "sweep"
    oracle: bool = True
    notes: tuple = field(default=())

    @property
    def reference(self):
        return next(iter(self.variants.values()))


def _cfg(**kw):
    return validate(RunConfig(**kw))


def _fig1():
    base = dict(model="absorber", params={"gamma": 0.0, "epsilon": 0.0}, init="coherent",
                init_alpha=INV_SQRT2, n_traj=40000, seed=101, dt=0.005, t_end=3.5,
                record_stride=20, oracle_dim=20)
    return Recipe("fig1_absorber", "two-boson absorber, circular gauge vs positive P",
                  {"gauge": _cfg(gauge="circular", label="gauge", **base),
                   "positive_p": _cfg(gauge="none", label="positive_p", **base)})


def _fig2():
    base = dict(model="absorber", params={"gamma": 0.0, "epsilon": 0.0}, init="coherent",
                n_traj=100000, seed=202, dt=0.01, t_end=3.5, record_stride=50,
                sweep_param="init_alpha", sweep_values=(0.25, 0.5, 0.7071, 1.0, 1.5, 2.0),
                readout_time=3.5, overflow_guard=1e3)
    return Recipe("fig2_sweep", "steady-state <n> against coherent amplitude",
                  {"gauge": _cfg(gauge="circular", label="gauge", **base),
                   "positive_p": _cfg(gauge="none", label="positive_p", **base)},
                  kind="sweep", oracle=False)


def _fig3():
    base = dict(model="absorber", params={"gamma": 0.1, "epsilon": 0.0}, init="coherent",
                init_alpha=10.0, seed=303, dt=0.0005, t_end=10.0, record_stride=500,
                oracle_dim=200)
    return Recipe("fig3_one_two_boson", "one- and two-boson loss from <n> = 100",
                  {"gauge": _cfg(gauge="circular", n_traj=100000, label="gauge", **base),
                   "positive_p": _cfg(gauge="none", n_traj=10000, label="positive_p", **base)},
                  notes=("fixed dt = 0.0005 instead of a ramped step",))


def _fig4():
    base = dict(model="absorber", params={"gamma": 0.0, "epsilon": 0.05}, init="coherent",
                init_alpha=0.0, seed=404, dt=0.025, t_end=20.0, record_stride=40,
                oracle_dim=20)
    return Recipe("fig4_driven", "driven two-boson absorber from vacuum",
                  {"gauge": _cfg(gauge="circular", n_traj=100000, label="gauge", **base),
                   "positive_p": _cfg(gauge="none", n_traj=1000, label="positive_p", **base)})


def _fig5():
    base = dict(model="laser_number", params={"G": 1.0, "Q": 0.25}, init="gaussian",
                seed=505, dt=0.005, t_end=6.0, record_stride=50)
    return Recipe("fig5_laser", "single-mode laser: delta start, broad starts, laser gauge",
                  {"reference": _cfg(gauge="none", init_sigma0sq=0.0, n_traj=100000,
                                     label="reference", **base),
                   "gauge": _cfg(gauge="laser", gauge_lambda=4.0, init_sigma0sq=0.1,
                                 n_traj=4000, label="gauge", **base),
                   "positive_p_sigma0.1": _cfg(gauge="none", init_sigma0sq=0.1, n_traj=100000,
                                               label="positive_p_sigma0.1", **base),
                   "positive_p_sigma1": _cfg(gauge="none", init_sigma0sq=1.0, n_traj=10000,
                                             label="positive_p_sigma1", **base)})


def _kerr():
    base = dict(model="kerr", params={"omega0": 1.0, "kappa": 1.0}, init="coherent",
                init_alpha=1.0, n_traj=20000, seed=606, dt=0.001, t_end=0.5,
                record_stride=100, moments=((0, 1), (1, 1)), oracle_dim=30)
    return Recipe("kerr_demo", "Kerr oscillator with and without a diffusion gauge",
                  {"canonical": _cfg(label="canonical", **base),
                   "diffusion_gauge": _cfg(diffusion_g=(0.5j,), label="diffusion_gauge",
                                           **base)})


def _variance():
    base = dict(model="weight_toy", params={}, init="coherent", n_traj=100000, seed=707,
                dt=0.001, t_end=1.0, record_stride=100, scheme="ito_euler", gauge="constant")
    return Recipe("variance_laws", "weight spread under constant real or imaginary gauges",
                  {"imaginary": _cfg(gauge_values=(1j,), label="imaginary", **base),
                   "real": _cfg(gauge_values=(1.0,), label="real", **base)},
                  oracle=False)


RECIPES = {r.name: r for r in (_fig1(), _fig2(), _fig3(), _fig4(), _fig5(), _kerr(),
                               _variance())}


def get(name):
    try:
        return RECIPES[name]
    except KeyError:
        raise KeyError(f"unknown recipe {name!r}; available: {', '.join(RECIPES)}") from None
