import os
import json
import logging
from rich.console import Console

# --- FILE PATHS ---
# PROJECT_ROOT_DIR is passed from main.py (or the tests) to functions needing it.

LOG_FILENAME_BASENAME = "hqmm_inspector.log"
CONFIG_FILENAME_BASENAME = "config.json"

# --- RICH CONSOLES ---
# console carries results (tables, JSON, CSV previews, symbol streams);
# status_console carries progress and chatter so stdout stays machine-readable.
console = Console()
status_console = Console(stderr=True)

# --- APPLICATION CONFIGURATION DEFAULTS ---
# Script defaults, updated by load_app_config from config.json
SCRIPT_DEFAULTS = {
    "tau_stoch": 1e-9,
    "tau_zero": 1e-12,
    "tau_eig": 1e-12,
    "stationary_max_iterations": 1_000_000,
    "stationary_uniqueness_tol": 1e-9,
    "jacobi_threshold": 1e-14,
    "jacobi_max_sweeps": 100,
    "word_budget": 2 ** 22,
    "default_block_depth": 8,
    "default_log_base": "2",
    "default_steps": 1000,
    "default_seed": 0,
    "deep_steps": 1_000_000,
    "deep_block_length": 3,
    "deep_tv_threshold": 0.01,
    "spectrum_oracle_max_dim": 16,
    "default_jobs": os.cpu_count() or 1,
    "log_filename": LOG_FILENAME_BASENAME,
    "default_sweep_output": "sweep.csv",
}

APP_CONFIG = dict(SCRIPT_DEFAULTS)

_FLOAT_KEYS = ["tau_stoch", "tau_zero", "tau_eig", "stationary_uniqueness_tol",
               "jacobi_threshold", "deep_tv_threshold"]
_INT_KEYS = ["stationary_max_iterations", "jacobi_max_sweeps", "word_budget",
             "default_block_depth", "default_steps", "default_seed", "deep_steps",
             "deep_block_length", "spectrum_oracle_max_dim", "default_jobs"]


def tolerance(name):
    """Single access point for numeric tolerances (tau_stoch, tau_zero, tau_eig, ...)."""
    return APP_CONFIG[name]


# --- LOGGING SETUP ---
def setup_logging(project_root_dir, verbose_flag=False):
    level = logging.DEBUG if verbose_flag else logging.INFO
    log_file_path = os.getenv("HQMM_LOG_FILE") or os.path.join(project_root_dir, APP_CONFIG["log_filename"])

    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)-8s - [%(module)s.%(funcName)s:%(lineno)d] - %(message)s',
        filename=log_file_path,
        filemode='w',
        force=True,
    )

    if verbose_flag:
        status_console.print("[yellow]Verbose mode enabled. Detailed logging to file and console.[/yellow]")

    logging.info(f"Logging initialized. Log file: {log_file_path}")
    return log_file_path


# --- CONFIG LOADING ---
def load_app_config(project_root_dir, quiet=False):
    config_file_path = os.getenv("HQMM_CONFIG_FILE") or os.path.join(project_root_dir, CONFIG_FILENAME_BASENAME)

    # Start again from the script defaults so repeated loads (tests, sweeps) do not accumulate.
    APP_CONFIG.clear()
    APP_CONFIG.update(SCRIPT_DEFAULTS)

    user_config = {}
    try:
        with open(config_file_path, 'r', encoding='utf-8') as f:
            user_config = json.load(f)
        msg = f"Configuration loaded and merged from {config_file_path}"
        logging.info(msg)
        if not quiet:
            status_console.print(f"[green]{msg}[/green]")
    except FileNotFoundError:
        msg = f"Configuration file '{config_file_path}' not found. Using internal defaults."
        logging.warning(msg)
        if not quiet:
            status_console.print(f"[yellow]{msg}[/yellow]")
    except json.JSONDecodeError:
        msg = f"Could not decode '{config_file_path}'. Check its JSON format. Using internal defaults."
        logging.error(msg)
        if not quiet:
            status_console.print(f"[red]{msg}[/red]")

    for key in APP_CONFIG:
        if key in user_config:
            APP_CONFIG[key] = user_config[key]

    env_jobs = os.getenv("HQMM_JOBS")
    if env_jobs:
        APP_CONFIG["default_jobs"] = env_jobs

    for key_numeric, cast in [(k, float) for k in _FLOAT_KEYS] + [(k, int) for k in _INT_KEYS]:
        try:
            APP_CONFIG[key_numeric] = cast(APP_CONFIG[key_numeric])
        except (TypeError, ValueError):
            msg = (f"Config value for '{key_numeric}' ('{APP_CONFIG[key_numeric]}') is not a valid "
                   f"{cast.__name__}. Using script default: {SCRIPT_DEFAULTS[key_numeric]}.")
            logging.warning(msg)
            if not quiet:
                status_console.print(f"[red]Warning: {msg}[/red]")
            APP_CONFIG[key_numeric] = SCRIPT_DEFAULTS[key_numeric]

    APP_CONFIG["default_log_base"] = str(APP_CONFIG["default_log_base"])
    return APP_CONFIG


def v_print(message, verbose_flag):
    if verbose_flag:
        status_console.print(f"[dim]VERBOSE:[/dim] {message}")
        logging.debug(f"VERBOSE: {message}")
