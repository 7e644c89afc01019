from lares.model.config import ModelConfig, model_preset
from lares.model.network import RestorationModel, build_model

__all__ = ["ModelConfig", "RestorationModel", "build_model", "model_preset"]
