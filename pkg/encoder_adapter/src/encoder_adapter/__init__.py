"""Speech-encoder judge model emitting turn-taking likelihood streams."""

from .encoders import PretrainedSpeechEncoder, SpectrogramEncoder
from .model import CLASSES, EncoderJudgeModel, load_model, save_model
from .streams import emit_stream, stream_rows
from .training import TrainResult, train_encoder_judge

__version__ = "0.1.0"

__all__ = [
    "CLASSES",
    "EncoderJudgeModel",
    "PretrainedSpeechEncoder",
    "SpectrogramEncoder",
    "TrainResult",
    "emit_stream",
    "load_model",
    "save_model",
    "stream_rows",
    "train_encoder_judge",
]
