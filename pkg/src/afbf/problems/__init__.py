"""Encoders from concrete problem data to operator triples."""

from .fractional import FractionalInstance, encode_fractional, gen_fractional
from .holder import encode_holder_toy
from .qcqp import QcqpInstance, encode_qcqp, gen_synthetic_qcqp
from .svm import SvmDataset, build_svm_qcqp, single_kernel_svm, svm_predict

__all__ = [
    "FractionalInstance",
    "QcqpInstance",
    "SvmDataset",
    "build_svm_qcqp",
    "encode_fractional",
    "encode_holder_toy",
    "encode_qcqp",
    "gen_fractional",
    "gen_synthetic_qcqp",
    "single_kernel_svm",
    "svm_predict",
]
