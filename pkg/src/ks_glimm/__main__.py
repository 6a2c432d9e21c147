from __future__ import annotations

from ks_glimm.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
