"""tvc: a desk-scale video coding toolkit.

Perceptual rate allocation (sequence classification, key-frame QP offset,
per-CTU perceptual and block-importance deltas), a minimal block codec that
consumes the resulting QP plans, and a deterministic runtime for the CNN
in-loop filter and neural intra prediction.
"""

from .bim import (
    bim_sequence,
    block_error,
    ctu_mean_e,
    delta_qp_of_e3,
    e3,
    frame_errors,
    pair_e,
)
from .codec import (
    BlockMode,
    CodecConfig,
    decide_cnnlf_flags,
    decode_sequence,
    encode_sequence,
    rd_cost,
    rd_lambda,
)
from .cnnlf import CnnlfModel, cnnlf_forward
from .motion import MotionField, MotionVector, downsample2x, estimate_motion, motion_compensate
from .nn_intra import (
    IntraModelSet,
    NnIntraModel,
    assemble_intra_context,
    nnintra_predict,
    select_model_for_qp,
)
from .nnwf import load_weights, save_weights
from .qp_adapt import (
    AnalyzeConfig,
    QpPlan,
    analyze,
    classify_sequence,
    compose_qp_plan,
    keyframe_offset,
    perceptual_ctu_delta,
    read_qpmap,
    uniform_plan,
    write_qpmap,
)
from .video_io import Frame420, Plane, psnr, read_yuv420, sequence_y_psnr, write_yuv420

__version__ = "0.1.0"
