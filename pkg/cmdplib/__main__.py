from __future__ import annotations

from cmdplib.main import main

main()
