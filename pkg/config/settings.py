import os
from dotenv import load_dotenv

# Load from .env file if available
load_dotenv()

# === Paths ===
DATA_ROOT = os.getenv("HNETCL_DATA_ROOT", "datasets/mnist")
LOG_DIR = os.getenv("HNETCL_LOG_DIR", "logs")
LOG_LEVEL = os.getenv("HNETCL_LOG_LEVEL", "INFO")
DEFAULT_OUT_DIR = os.getenv("HNETCL_OUT_DIR", "results")

# MNIST IDX file names under DATA_ROOT (".gz" variants are picked up too)
MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}

# === Hypernetwork ===
EMBEDDING_DIM = 96  # task and chunk embeddings
LSTM_HIDDEN = 64
DEFAULT_CHUNK_SIZE = 4000
EMBEDDING_INIT_STD = 0.1  # N(0, 0.01 I)
FORGET_BIAS = 1.0  # only used when gate biases are enabled

# === Main network ===
SPLIT_MNIST_HIDDEN = [400, 400]
PERMUTED_MNIST_HIDDEN = [1000, 1000]
SYNTH_HIDDEN = [100, 100]

# === Optimisation ===
DEFAULT_LR = 1e-3
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
DEFAULT_BETA = 0.01  # regularisation constant
DEFAULT_BATCH_SIZE = 128
EPOCHS_BY_DATASET = {
    "split_mnist": 4,
    "permuted_mnist": 2,
    "synth": 30,
}

# === Regularisation ===
FISHER_MAX_SAMPLES = 2000

# === Task sequences ===
SPLIT_MNIST_PAIRING = [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)]
PERMUTED_MNIST_TASKS = 10
SYNTH_TASKS = 6
SYNTH_CLASSES = 10
SYNTH_DIM = 32
SYNTH_SEPARATION = 3.0
SYNTH_SAMPLES_PER_CLASS = 200
SYNTH_TEST_FRACTION = 0.2

# === Checkpoints ===
CHECKPOINT_FORMAT = "hnetcl-ckpt/1"
