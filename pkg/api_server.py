"""Run the Robust HTE API server."""

import uvicorn

from robust_hte.core.config import settings

if __name__ == "__main__":
    uvicorn.run(
        "robust_hte.api:app",
        host="0.0.0.0",
        port=8000,
        reload=settings.debug,
        log_level=settings.log_level.lower()
    )
