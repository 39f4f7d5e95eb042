"""
Subcommand registry for the blockspec CLI.

Maps subcommand names to their metadata so the argument parser, the help text
and the tests all agree on which flags a command takes. Only registered
subcommands are exposed by `scripts.blockspec`.

To add a new subcommand, add an entry to COMMAND_REGISTRY below and a
matching `cmd_<name>` function in scripts/blockspec.py.
"""

# Each entry maps a subcommand to its metadata:
#   description:   Shown in --help
#   flags:         Long options the subcommand accepts
#   needs_seed:    If True, --seed is mandatory (no silent nondeterminism)

COMMAND_REGISTRY: dict[str, dict] = {
    "bounds": {
        "description": "Deviation bounds for the first block repeated, with the rest as perturbed copies",
        "flags": ["--manifest", "--rank", "--tau", "--rank-tol", "--report", "--with-timing"],
        "needs_seed": False,
    },
    "plan": {
        "description": "Greedy grouping of consecutive blocks under the (r, tau) spectral budget",
        "flags": ["--manifest", "--rank", "--tau", "--rank-tol", "--strict-paper-k", "--report", "--with-timing"],
        "needs_seed": False,
    },
    "compress": {
        "description": "Plan, jointly compress every group and write a BSPC1 container",
        "flags": ["--manifest", "--rank", "--tau", "--rank-tol", "--strict-paper-k", "--out", "--report", "--with-timing"],
        "needs_seed": False,
    },
    "decompress": {
        "description": "Reconstruct every block of a BSPC1 container into CSV files",
        "flags": ["--container", "--out", "--report", "--with-timing"],
        "needs_seed": False,
    },
    "verify": {
        "description": "Randomized soundness certification of every bound against full-SVD oracles",
        "flags": ["--m", "--n", "--k", "--rank", "--eps", "--seed", "--trials", "--workers", "--report", "--with-timing"],
        "needs_seed": True,
    },
    "sweep": {
        "description": "Continuity sweep: measured deviation vs envelope over a decreasing eps grid",
        "flags": ["--m", "--n", "--k", "--rank", "--seed", "--trials", "--eps-grid", "--report", "--with-timing"],
        "needs_seed": True,
    },
}

EXIT_CODES: dict[str, int] = {
    "ok": 0,
    "io": 2,
    "shape": 3,
    "rank_deficient": 4,
    "rank_too_large": 5,
    "soundness": 6,
}


def get_command(name: str) -> dict | None:
    """Look up a subcommand by name. Returns None if not registered."""
    return COMMAND_REGISTRY.get(name)


def list_commands() -> dict[str, dict]:
    """Return the full subcommand registry."""
    return COMMAND_REGISTRY
