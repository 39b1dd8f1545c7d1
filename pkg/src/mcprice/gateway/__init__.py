from mcprice.gateway.backends import BackendError, BackendKind, BackendProfile, Lifecycle, make_backend
from mcprice.gateway.models import OptionResult, PriceResult, PricingRequest, RequestError, SubRequest
from mcprice.gateway.pool import ServiceUnavailable, Worker, WorkerPool
from mcprice.gateway.service import Gateway, GatewayConfig
from mcprice.gateway.splitter import merge, split

__all__ = [
    "BackendError", "BackendKind", "BackendProfile", "Gateway", "GatewayConfig", "Lifecycle",
    "OptionResult", "PriceResult", "PricingRequest", "RequestError", "ServiceUnavailable",
    "SubRequest", "Worker", "WorkerPool", "make_backend", "merge", "split",
]
