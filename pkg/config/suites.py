# Benchmark suites used by `bench` (parameter grids per application)

fda_rhos = [10.0, 100.0, 1000.0]
fda_rank = 20
fda_sparsity_ratio = 0.1

srm_portfolios = 100
srm_beta0 = 0.01

recovery_penalties = [(10.0, 1.0), (10.0, 10.0), (10.0, 100.0), (100.0, 1.0), (100.0, 100.0)]
recovery_box = float('inf')

d_variants = ["fadmm-d", "spgm-d", "spm"]
all_variants = ["fadmm-d", "fadmm-q", "spgm-d", "spgm-q", "spm"]

# randn-m-d datasets generated on the fly for each suite
suite_datasets = {
    "fda": ["randn-200-100", "randn-500-200"],
    "srm": ["randn-200-100", "randn-500-200"],
    "recovery": ["randn-100-200", "randn-200-500"],
}

suite_variants = {
    "fda": all_variants,
    "srm": all_variants,
    "recovery": d_variants,
}


def fda_beta0(rho):
    return 100.0 * rho


def recovery_beta0(rho1):
    # keeps the smoothing radius chi/beta0 times rho1 at order one
    return rho1
