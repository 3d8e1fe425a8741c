"""Constants, option keys and defaults for polytope_capacity."""

DOMAIN = "polytope_capacity"
SCHEMA_VERSION = 1

# ── Option keys ────────────────────────────────────────────────────────
CONF_SYM_TOL = "sym_tol"
CONF_RANK_TOL = "rank_tol"
CONF_FEAS_TOL = "feas_tol"
CONF_POS_TOL = "pos_tol"
CONF_DEDUP_TOL = "dedup_tol"
CONF_RECONSTRUCT_TOL = "reconstruct_tol"
CONF_MAX_FACETS = "max_facets"
CONF_MAX_DIM = "max_dim"
CONF_EXACT_CAP = "exact_cap"
CONF_FACE_BUDGET = "face_budget"
CONF_MODE = "mode"  # "exact" or "random"
CONF_PERM_BUDGET = "perm_budget"
CONF_SEED = "seed"
CONF_WORKERS = "workers"
CONF_TRANSLATE = "translate"  # "auto" or "none"
CONF_OMEGA_SIGN = "omega_sign"  # +1 or -1
CONF_CHUNK_SIZE = "chunk_size"
CONF_CHUNK_CELLS = "chunk_cells"  # float cells per chunk in the QP engine

# ── Search modes ───────────────────────────────────────────────────────
MODE_EXACT = "exact"
MODE_RANDOM = "random"
MODES = (MODE_EXACT, MODE_RANDOM)

TRANSLATE_AUTO = "auto"
TRANSLATE_NONE = "none"

# ── Capacity kinds ─────────────────────────────────────────────────────
KIND_EHZ = "ehz"
KIND_PSI = "psi"
KIND_LR = "lr"

# ── Tolerances ─────────────────────────────────────────────────────────
DEFAULT_SYM_TOL = 1e-10
DEFAULT_RANK_TOL = 1e-10  # relative to the largest singular value
DEFAULT_FEAS_TOL = 1e-9
DEFAULT_POS_TOL = 1e-12
DEFAULT_DEDUP_TOL = 1e-9
DEFAULT_RECONSTRUCT_TOL = 1e-8
NORMAL_TOL = 1e-12
TIE_TOL = 1e-12

# ── Budgets ────────────────────────────────────────────────────────────
DEFAULT_MAX_FACETS = 24
DEFAULT_MAX_DIM = 8
DEFAULT_EXACT_CAP = 8  # F! permutations
DEFAULT_FACE_BUDGET = 2**20
DEFAULT_PERM_BUDGET = 10_000
DEFAULT_CHUNK_SIZE = 720
DEFAULT_CHUNK_CELLS = 2**22
DEFAULT_MODE = MODE_EXACT
DEFAULT_SEED = 0
DEFAULT_WORKERS = 1
DEFAULT_TRANSLATE = TRANSLATE_AUTO
DEFAULT_OMEGA_SIGN = 1

# ── Oracles ────────────────────────────────────────────────────────────
DEFAULT_ORACLE_SAMPLES = 100_000
DEFAULT_ASCENT_RESTARTS = 50
DEFAULT_ASCENT_STEPS = 500

# ── CLI exit codes ─────────────────────────────────────────────────────
EXIT_OK = 0
EXIT_MALFORMED = 2
EXIT_HYPOTHESIS = 3
EXIT_BUDGET = 4
EXIT_VERIFICATION = 5
