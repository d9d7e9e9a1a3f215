"""Generalized-Beta fits, power-law tail fits and Dragon-King U-tests for
heavy-tailed samples."""

__version__ = "0.1.0"

from .distributions import (GB2Params, GBParams, gb2_ccdf, gb2_cdf, gb2_pdf, gb_ccdf_near_beta1,
                            gb_pdf, mgb2_pdf, mgb_ccdf, mgb_ccdf_near_beta1, mgb_cdf, mgb_pdf,
                            sample_gb2, sample_mgb)
from .dragonking import Flag, UTestReport, classify, u_test, u_test_pvalues
from .empirical import CcdfCurve, CiBand, SortedSample, build_ccdf, ci_band, log_binned_pdf
from .fitting import (FitConfig, FitResult, FractionOfMax, ManualExclude, TailFit, fit_mle,
                      ks_statistic, tail_linear_fit)

__all__ = [
    "GB2Params", "GBParams", "gb2_ccdf", "gb2_cdf", "gb2_pdf", "gb_ccdf_near_beta1", "gb_pdf",
    "mgb2_pdf", "mgb_ccdf", "mgb_ccdf_near_beta1", "mgb_cdf", "mgb_pdf", "sample_gb2",
    "sample_mgb", "Flag", "UTestReport", "classify", "u_test", "u_test_pvalues", "CcdfCurve",
    "CiBand", "SortedSample", "build_ccdf", "ci_band", "log_binned_pdf", "FitConfig",
    "FitResult", "FractionOfMax", "ManualExclude", "TailFit", "fit_mle", "ks_statistic",
    "tail_linear_fit",
]
