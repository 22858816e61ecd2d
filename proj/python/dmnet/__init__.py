"""Deep morphological networks: learnable morphology on a small C++ core."""

from ._core import (
    CenterPolicy,
    binarize_bank,
    MorphDirection,
    ReconstructionKind,
    StructuringElement,
    architecture_names,
    black_tophat,
    build_network,
    closing,
    decode_netpbm,
    dilate,
    dilate_se_for_reconstruction,
    encode_netpbm,
    erode,
    framework_morph,
    gen_rectangles,
    gen_squares,
    make_rectangle,
    make_se,
    opening,
    parse_se_ascii,
    reconstruct,
    reconstruct_approx,
    recover_se,
    white_tophat,
    Network,
)

__all__ = [
    "CenterPolicy",
    "binarize_bank",
    "MorphDirection",
    "Network",
    "ReconstructionKind",
    "StructuringElement",
    "architecture_names",
    "black_tophat",
    "build_network",
    "closing",
    "decode_netpbm",
    "dilate",
    "dilate_se_for_reconstruction",
    "encode_netpbm",
    "erode",
    "framework_morph",
    "gen_rectangles",
    "gen_squares",
    "make_rectangle",
    "make_se",
    "opening",
    "parse_se_ascii",
    "reconstruct",
    "reconstruct_approx",
    "recover_se",
    "white_tophat",
]
