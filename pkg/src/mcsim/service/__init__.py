from .schemas import WhatIfRequest, WhatIfResponse
from .app import create_app

__all__ = ["WhatIfRequest", "WhatIfResponse", "create_app"]
