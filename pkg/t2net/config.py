from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    log_level: str = "INFO"

    # Worker count for per-slice generation and per-sample evaluation (env var: THREADS)
    threads: int = Field(default=1, ge=1)

    # Query rows per block in the row-streaming relevance embedding
    relevance_chunk_rows: int = Field(default=256, ge=1)

    psnr_cap_db: float = 100.0

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "extra": "ignore",
    }


settings = Settings()
