# src/ks_glimm/db/duckdb_store.py
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import duckdb
import pandas as pd

SCHEMA_VERSION = "1"


def _qident(name: str) -> str:
    """Quote an identifier for DuckDB SQL (table/column names)."""
    return '"' + name.replace('"', '""') + '"'


def _pragma_table_info_sql(table_name: str) -> str:
    safe = table_name.replace("'", "''")
    return f"PRAGMA table_info('{safe}')"


@dataclass
class ResultsStore:
    """DuckDB file holding run metadata, per-strip diagnostics, fits and convergence tables."""

    db_path: Path

    def connect(self, *, read_only: bool = False) -> duckdb.DuckDBPyConnection:
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        return duckdb.connect(str(self.db_path), read_only=read_only)

    def _table_columns(self, con: duckdb.DuckDBPyConnection, table_name: str) -> list[str]:
        rows = con.execute(_pragma_table_info_sql(table_name)).fetchall()
        # (cid, name, type, notnull, dflt_value, pk)
        return [r[1] for r in rows]

    def init_schema(self) -> None:
        sql = (Path(__file__).resolve().parent / "schema.sql").read_text(encoding="utf-8")
        with self.connect() as con:
            con.execute(sql)
            con.execute("INSERT OR REPLACE INTO meta_info(key, value) VALUES (?, ?)", ["schema_version", SCHEMA_VERSION])

    def _insert_frame(self, con: duckdb.DuckDBPyConnection, table_name: str, df: pd.DataFrame) -> int:
        """Insert by column NAME; frame columns the table lacks are ignored."""
        if len(df) == 0:
            return 0
        table_cols = self._table_columns(con, table_name)
        common = [c for c in df.columns if c in table_cols]
        if not common:
            raise ValueError(f"No matching columns between frame ({list(df.columns)}) and table {table_name} ({table_cols})")
        con.register("incoming_df", df[common])
        try:
            cols_sql = ", ".join(_qident(c) for c in common)
            con.execute(f"INSERT OR REPLACE INTO {_qident(table_name)} ({cols_sql}) SELECT {cols_sql} FROM incoming_df")
        finally:
            con.unregister("incoming_df")
        return len(df)

    def record_run(
        self,
        run_id: str,
        *,
        command: str,
        config_text: str,
        version: str,
        status: str,
        exit_code: int,
        message: str = "",
        delta: float | None = None,
        sigma: float | None = None,
        mass: float | None = None,
        n_strips: int | None = None,
        out_dir: str | None = None,
    ) -> None:
        row = pd.DataFrame(
            [
                {
                    "run_id": run_id,
                    "command": command,
                    "config_text": config_text,
                    "version": version,
                    "status": status,
                    "exit_code": exit_code,
                    "message": message,
                    "delta": delta,
                    "sigma": sigma,
                    "mass": mass,
                    "n_strips": n_strips,
                    "out_dir": out_dir,
                }
            ]
        )
        with self.connect() as con:
            self._insert_frame(con, "runs", row)

    def record_diagnostics(self, run_id: str, df: pd.DataFrame) -> int:
        frame = df.copy()
        frame.insert(0, "run_id", run_id)
        with self.connect() as con:
            con.execute("DELETE FROM diagnostics WHERE run_id = ?", [run_id])
            return self._insert_frame(con, "diagnostics", frame)

    def record_fit(self, run_id: str, series: str, fit) -> None:
        row = pd.DataFrame(
            [
                {
                    "run_id": run_id,
                    "series": series,
                    "model": fit.model,
                    "exponent": fit.exponent,
                    "prefactor": fit.prefactor,
                    "residual": fit.residual,
                    "t_lo": fit.window[0],
                    "t_hi": fit.window[1],
                    "n_samples": fit.n_samples,
                    "accepted": bool(fit.accepted),
                }
            ]
        )
        with self.connect() as con:
            self._insert_frame(con, "fits", row)

    def record_convergence(self, run_id: str, df: pd.DataFrame) -> int:
        """``df`` carries columns ``h, quantity, value, ratio``."""
        frame = df.copy()
        frame.insert(0, "run_id", run_id)
        with self.connect() as con:
            return self._insert_frame(con, "convergence", frame)

    def load_diagnostics(self, run_id: str) -> pd.DataFrame:
        with self.connect(read_only=True) as con:
            return con.execute("SELECT * FROM diagnostics WHERE run_id = ? ORDER BY m", [run_id]).fetchdf()

    def load_runs(self) -> pd.DataFrame:
        with self.connect(read_only=True) as con:
            return con.execute("SELECT run_id, command, status, exit_code, delta, sigma, mass, n_strips FROM runs ORDER BY run_id").fetchdf()
