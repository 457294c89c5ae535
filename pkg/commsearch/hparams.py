class HParams:
    def __init__(self, **kwargs):
        self.data = {}

        for key, value in kwargs.items():
            self.data[key] = value

    def __getattr__(self, key):
        if key == "data":
            raise AttributeError(key)
        if key not in self.data:
            raise AttributeError("'HParams' object has no attribute %s" % key)
        return self.data[key]

    def set_hparam(self, key, value):
        if key not in self.data:
            raise AttributeError("'HParams' object has no attribute %s" % key)
        self.data[key] = value

    def values(self):
        return dict(self.data)


# Default numerical parameters
hparams = HParams(
    ###################### Quadrature #################################
    quad_initial_nodes=256,  # Gauss-Legendre nodes on the first pass
    quad_max_nodes=16384,  # node doubling stops here even if not converged
    quad_rtol=1e-11,  # successive log Z estimates must agree this closely
    quad_tail_drop=50.0,  # integration window: log-integrand within this of its peak
    cdf_panels=64,  # fixed panels laid over the window for cumulative masses
    cdf_panel_nodes=32,  # Gauss-Legendre nodes per cumulative piece
    order_stat_panels=32,  # first pass of the E[max] composite rule (doubled)
    order_stat_max_panels=1024,
    order_stat_rtol=1e-12,

    ###################### Sampling ###################################
    max_rejection_rounds=10**6,  # rejection loop guard, trips only on an envelope bug
    max_set_size=10**6,  # per-call cap on n

    ###################### Asymptotic solver ##########################
    joint_grid_points=101,  # coarse grid per axis over the compact box
    frontier_w_points=1001,  # w resolution of the vectorised frontier on the coarse grid
    frontier_scan_points=41,  # scan before the bounded Brent step of the exact frontier
    refine_xatol=1e-10,
    refine_fatol=1e-14,
    refine_maxiter=4000,
    polish_sweeps=3,  # alternating coordinate passes after Nelder-Mead
    tie_tolerance=1e-9,  # hybrid within this of search-only is reported as search-only
    zero_tolerance=1e-6,  # rho or alpha below this counts as zero
    rho_shrink=1e-9,  # keeps the rho bracket inside the open interval
    switching_rtol=1e-4,  # bisection width relative to c_s
    switching_floor=1e-3,  # lower bisection end relative to c_s

    ###################### Simulation #################################
    replications=20000,  # std error ~0.004 on the utility for d <= 40
    max_n=4096,
    workers=1,
    seed=0,
    min_reported_replications=100,
)


def hparams_debug_string():
    values = hparams.values()
    hp = ["  %s: %s" % (name, values[name]) for name in sorted(values)]
    return "Hyperparameters:\n" + "\n".join(hp)
