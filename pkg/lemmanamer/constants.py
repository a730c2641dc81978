GET_TIMEOUT = 10

SEED_ENV_VAR = "LEMMA_NAMER_SEED"
DEFAULT_SEED = 4187

# Special vocabulary entries, fixed ids.
PAD_TOKEN = "<pad>"
BOS_TOKEN = "<s>"
EOS_TOKEN = "</s>"
UNK_TOKEN = "<unk>"
PAD = 0
BOS = 1
EOS = 2
UNK = 3
SPECIAL_TOKENS = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN)

UNDERSCORE = "_"
OPEN_PAREN = "("
CLOSE_PAREN = ")"

MAX_SEXP_DEPTH = 100000

DEFAULT_LOCATION_HEADS = ("loc",)
DEFAULT_QUALIFIED_NAME_HEADS = ("Ref", "Ser_Qualid")
DIRPATH_HEAD = "DirPath"
ID_HEAD = "Id"

OUTLIER_QUANTILE = 0.25
SPLIT_FRACTIONS = (0.8, 0.1, 0.1)

# Hyperparameter search space.
EMBEDDING_DIMS = (200, 500, 1000)
HIDDEN_UNITS = (200, 500, 1000)
NUM_LAYERS = (1, 2, 3)
DROPOUT = 0.5
BEAM_SIZE = 5
MAX_DECODE_LEN = 64
MAX_INPUT_LEN = 1500
INIT_RANGE = 0.1

LEARNING_RATE = 0.001
CHECKPOINT_INTERVAL = 200
EARLY_STOP_PATIENCE = 3
BATCH_SIZE = 32
MAX_STEPS = 20000
MAX_GRAD_NORM = 5.0

BOOTSTRAP_RESAMPLES = 10000
SIGNIFICANCE_LEVEL = 0.05
TOP_K = 5

CHECKPOINT_VERSION = 1
