"""CLI for extvc."""
from typing import List, Any
import logging
import sys
import warnings
from dataclasses import dataclass, field

import yaml
import hydra
from hydra.core.config_store import ConfigStore
from omegaconf import MISSING, OmegaConf

from extvc.base import ExtVCError, dump_json
from extvc.scheduling import Scheduler
from extvc.cli.readers import ImageCodec, ImageCodecPbm, ImageCodecPng
from extvc.cli.commands import (
    Command,
    CommandBuild,
    CommandConjecture,
    CommandEncode,
    CommandGap,
    CommandMeasure,
    CommandReport,
    CommandSearch,
    CommandStack,
    CommandVerify,
    RunContext,
    error_document,
)

warnings.filterwarnings("ignore", module="omegaconf")


__all__ = ["CLIConfig", "COMMANDS", "cs", "main"]


logger = logging.getLogger(__name__)

COMMANDS = [
    CommandBuild,
    CommandVerify,
    CommandEncode,
    CommandStack,
    CommandMeasure,
    CommandSearch,
    CommandGap,
    CommandConjecture,
    CommandReport,
]


@dataclass
class CLIConfig:
    """Configurations for the CLI."""

    defaults: List[Any] = field(
        default_factory=lambda: [
            {"command": MISSING},
            {"image": "pbm"},
            {"override hydra/job_logging": "colorlog"},
            {"override hydra/hydra_logging": "colorlog"},
            "_self_",
        ]
    )
    hydra: Any = field(
        default_factory=lambda: {
            "help": {"app_name": "extvc"},
            "run": {"dir": "./out-extvc/${now:%Y-%m-%d_%H-%M-%S}"},
            "job": {"name": "extvc", "chdir": False},
        }
    )
    command: Command = MISSING
    image: ImageCodec = MISSING
    json: bool = False
    scheduler: Scheduler.Config = field(default_factory=Scheduler.Config)


cs = ConfigStore.instance()
for _command in COMMANDS:
    cs.store(group="command", name=_command.name, node=_command)
cs.store(group="image", name="pbm", node=ImageCodecPbm)
cs.store(group="image", name="png", node=ImageCodecPng)
cs.store(name="config", node=CLIConfig)


def _plain(node: Any) -> Any:
    # solves pickling and keeps manifests free of omegaconf types
    return yaml.load(OmegaConf.to_yaml(node), Loader=yaml.FullLoader)


@hydra.main(config_name="config", config_path=None, version_base="1.1")
def main(cfg: CLIConfig) -> None:
    """CLI entrypoint, instantiates the scheduler, the image format and the selected command, then
    runs the command. Library errors end the process with their exit code (1 usage, 2
    infeasible, 3 verification failure, 4 search gate).

    Args:
         cfg (CLIConfig): CLI configurations.
    """
    scheduler = Scheduler(_plain(cfg.scheduler))
    codec = hydra.utils.instantiate(cfg.image)
    command = hydra.utils.instantiate(cfg.command, _convert_="all")
    context = RunContext(
        scheduler=scheduler,
        codec=codec,
        json=bool(cfg.json),
        arguments={"command": command.name, **_plain(cfg.command)},
    )
    try:
        code = command.run(context)
    except ExtVCError as e:
        logger.error("%s: %s", type(e).__name__, e)
        if cfg.json:
            print(dump_json(error_document(e)).rstrip())
        sys.exit(e.exit_code)
    if code:
        sys.exit(code)


if __name__ == "__main__":
    main()
