"""Toy-scale training for the tvc loop filter and intra predictors.

Talks to the codec strictly through its command line and file formats:
raw YUV in, aux reconstruction dumps and NNWF weights files out.
"""

from .datasets import Clip, IntraSample, TrainSample, build_dataset, build_intra_dataset
from .models import CnnlfNet, IntraNet
from .nnwf import read_nnwf, write_nnwf
from .parity import cnnlf_parity, intra_parity
from .training import RunLog, TrainingDiverged, train_cnnlf, train_nnintra

__version__ = "0.1.0"
