"""aquaprobe: adversarial robustness probing for water-demand forecasters.

The package trains a from-scratch LSTM on daily consumption series, attacks
its input windows with gradient-sign perturbations (single-step and
iterated), schedules perturbation budgets adaptively with learning automata,
and scores how visible the tampered stream is to a rolling z-score detector.
"""

__version__ = "0.1.0"

from .attacks import AttackConfig, fgsm, pgd
from .automata import (
    DEFAULT_ACTIONS,
    DelayBuffer,
    LearningAutomaton,
    RewardPolicy,
    RlaConfig,
    adaptive_penalty,
    apply_multi,
    judge,
    la_attack_loop,
    rla_attack_loop,
)
from .dataseries import (
    MinMaxScaler,
    RawSeries,
    SynthParams,
    WindowedDataset,
    build_dataset,
    fit_scale,
    load_csv,
    synthesize,
    window,
    write_csv,
)
from .detect import StealthReport, rolling_zscore_report
from .errors import (
    AquaprobeError,
    CadenceError,
    ConfigError,
    DataError,
    DegenerateFeatureError,
    FormatError,
    NumericError,
    ShapeError,
    TrainingDivergedError,
)
from .lstm import (
    DEFAULT_TRAIN_CONFIGS,
    AdversarialConfig,
    LstmParams,
    TrainConfig,
    forward_cell,
    init_params,
    input_gradients,
    mse_loss,
    param_gradients,
    predict,
    predict_batch,
    train,
)
from .metrics import EvalReport, evaluate, mae, mape, rmse
from .modelfile import SavedModel, load_model, save_model
from .numerics import Rng
