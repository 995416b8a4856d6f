import logging

import click
import uvicorn

from .config import ScorerConfig
from .engine import ModelNotLoaded
from .service import create_app


@click.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8500, show_default=True, type=int)
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Config JSON; STEPMATE_SCORER_* env vars override.")
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
def main(host: str, port: int, config_path: str | None, verbose: bool) -> None:
    """Run the scoring service. Models load up front; startup fails if any is unresolvable."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO)
    config = ScorerConfig.from_sources(config_path)
    try:
        app = create_app(config=config)
    except ModelNotLoaded as exc:
        raise click.ClickException(str(exc))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
