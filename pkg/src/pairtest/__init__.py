"""Distance- and kernel-based two-sample and independence tests.

Energy distance and distance covariance are computed from semimetrics of
negative type; MMD and HSIC from the kernels those semimetrics induce.
The two views give identical statistics, and the tests here can use
either.
"""
from .kernels import (
    DistanceInduced,
    EuclideanPower,
    FromKernel,
    Gaussian,
    Product,
    center_gram,
    distance_product_factors,
    gram,
    kernel_eval,
    median_heuristic_sigma,
    negative_type_form,
    semimetric_eval,
    semimetric_matrix,
)
from .nulls import (
    NullDistribution,
    NumericalError,
    TestConfig,
    TestOutcome,
    p_value,
    quadratic_bound_threshold,
    resample_null_hsic,
    resample_null_two_sample,
    run_independence_test,
    run_two_sample_test,
    spectral_null_hsic,
    spectral_null_two_sample,
)
from .statistics import PairedSample, as_sample, dcorr, dcov_v, energy_distance_v, hsic_v, mmd_v

__version__ = "0.1.0"
