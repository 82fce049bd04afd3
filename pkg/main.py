import asyncio
import os
import sys
from dotenv import load_dotenv

load_dotenv()  # HQMM_CONFIG_FILE, HQMM_LOG_FILE, HQMM_JOBS may come from .env

# Put the project directory on sys.path so hqmm_lib and core_logic import without installation.
SCRIPT_DIR_MAIN = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, SCRIPT_DIR_MAIN)

from hqmm_lib.app_orchestrator import run_cli
from hqmm_lib.config import status_console

if __name__ == "__main__":
    try:
        exit_code = asyncio.run(run_cli(SCRIPT_DIR_MAIN))
    except KeyboardInterrupt:
        status_console.print("\n[yellow]Interrupted by user.[/yellow]")
        exit_code = 130
    except Exception as e:
        status_console.print(f"[bold red]Unexpected critical error in main.py:[/bold red]\n{e}")
        status_console.print("Check the log file for details if it was created.")
        status_console.print_exception(show_locals=True)
        exit_code = 1
    sys.exit(exit_code)
