"""
Run directory: manifest, metrics table, images and curves of one command
"""
from datetime import datetime, timezone
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

from vvchip._version import __version__
from vvchip.exceptions.chip_exception import ArtifactIOError, ChipError
from vvchip.io.netpbm import write_pgm, write_ppm
from vvchip.scenarios.scenario_objects import SweepResult, jsonable

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
MANIFEST = "manifest.json"
METRICS = "metrics.csv"
MONTAGE = "montage.ppm"
PROVENANCE = "provenance.txt"


class RunDirectory:
    """
    Writes every artifact of a run; the timestamp lives only in the manifest
    """

    def __init__(self, path: Union[str, Path], command: str, seed: int):
        self.path = Path(path)
        self.command = command
        self.seed = seed
        try:
            self.path.mkdir(parents=True, exist_ok=True)
        except OSError as error:
            raise ArtifactIOError(str(self.path), error.strerror or str(error))

    def _subdirectory(self, name: str) -> Path:
        directory = self.path / name
        try:
            directory.mkdir(exist_ok=True)
        except OSError as error:
            raise ArtifactIOError(str(directory), error.strerror or str(error))
        return directory

    def _write_text(self, path: Path, text: str):
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as error:
            raise ArtifactIOError(str(path), error.strerror or str(error))

    def write_result(self, result: SweepResult):
        if result.points:
            frame = result.metrics_frame()
            self._write_text(
                self.path / METRICS,
                frame.to_csv(index=False, float_format=FLOAT_FORMAT),
            )
        if result.images:
            images = self._subdirectory("images")
            for name, image in sorted(result.images.items()):
                write_pgm(images / f"{name}.pgm", image)
        if result.montage is not None:
            write_ppm(self.path / MONTAGE, result.montage)
        if result.curves:
            curves = self._subdirectory("curves")
            for name, frame in sorted(result.curves.items()):
                self._write_text(
                    curves / f"{name}.csv",
                    frame.to_csv(index=False, float_format=FLOAT_FORMAT),
                )
        provenance = result.extras.get("provenance")
        if provenance:
            self._write_text(self.path / PROVENANCE, f"{provenance}\n")
        logger.info("wrote %s artifacts to %s", result.kind, self.path)

    def write_manifest(
        self,
        echo: Dict[str, Any],
        result: Optional[SweepResult] = None,
        error: Optional[ChipError] = None,
    ) -> Dict[str, Any]:
        manifest: Dict[str, Any] = {
            "command": self.command,
            "version": __version__,
            "seed": self.seed,
            "config": echo,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "results": None,
            "error": None if error is None else error.as_record(),
            "manifest_hash": None,
        }
        if result is not None:
            extras = dict(result.extras)
            extras.pop("provenance", None)
            manifest["results"] = jsonable(
                {"kind": result.kind, "points": len(result.points), **extras}
            )
            manifest["manifest_hash"] = result.compute_hash(echo)
        self._write_text(
            self.path / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n"
        )
        return manifest
