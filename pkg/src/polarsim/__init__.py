"""polarsim: polar-code BP decoding, syndrome-loss training, and blind equalization."""

from .polar import (PolarCode, construct_code, encode, bpsk_modulate,
                    frozen_parity_matrix, place_message)
from .crc import CrcSpec, crc_encode, crc_check, crc_parity_matrix
from .bp import (BpState, DecoderWeights, SoftOutputs, decode, bp_iterate,
                 hard_decision, init_messages, minsum_g)
from .losses import (soft_syndrome, syndrome_loss, frozen_syndrome_loss,
                     crc_syndrome_loss, bce_loss, mse)
from .channel import (ChannelRealization, gen_channel, apply_channel,
                      llr_from_signal, ebn0_to_sigma2)
from .equalizer import fir_apply, lms_train, cma_train, unit_impulse
from .training import (TrainConfig, TrainReport, EqTrainConfig, sgd_step,
                       train_decoder, train_equalizer_blind,
                       online_label_recovery_step)
from .harness import (StopRule, SweepResult, run_decoder_sweep,
                      run_blind_eq_experiment, emit_results, parse_results,
                      wilson_interval)
from .autodiff import Tape, grad_check

__version__ = "0.1.0"

__all__ = [
    "PolarCode", "construct_code", "encode", "bpsk_modulate",
    "frozen_parity_matrix", "place_message",
    "CrcSpec", "crc_encode", "crc_check", "crc_parity_matrix",
    "BpState", "DecoderWeights", "SoftOutputs", "decode", "bp_iterate",
    "hard_decision", "init_messages", "minsum_g",
    "soft_syndrome", "syndrome_loss", "frozen_syndrome_loss",
    "crc_syndrome_loss", "bce_loss", "mse",
    "ChannelRealization", "gen_channel", "apply_channel", "llr_from_signal",
    "ebn0_to_sigma2",
    "fir_apply", "lms_train", "cma_train", "unit_impulse",
    "TrainConfig", "TrainReport", "EqTrainConfig", "sgd_step",
    "train_decoder", "train_equalizer_blind", "online_label_recovery_step",
    "StopRule", "SweepResult", "run_decoder_sweep", "run_blind_eq_experiment",
    "emit_results", "parse_results", "wilson_interval",
    "Tape", "grad_check",
]
