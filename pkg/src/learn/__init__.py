from .logistic import GlmModel, fit_logistic, predict_many, predict_proba, train_logistic
from .metrics import auc, load_mse, normalized_distance

__all__ = [
    'GlmModel', 'auc', 'fit_logistic', 'load_mse', 'normalized_distance',
    'predict_many', 'predict_proba', 'train_logistic',
]
