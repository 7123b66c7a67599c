from .arbiter import Arbiter, ArrayMode
from .iiu import IiuProgram, InstructionInjector
from .tile import DCE_MVM_WORK_REGISTERS, DomainMove, HybridComputeTile
from .trace import Event, EventTrace
from .transfer import TransferEvent, TransferNetwork
from .vacore import DigitalCopy, VACore, alloc_vacore, build_vacore

__all__ = [
    "Arbiter",
    "ArrayMode",
    "DCE_MVM_WORK_REGISTERS",
    "DigitalCopy",
    "DomainMove",
    "Event",
    "EventTrace",
    "HybridComputeTile",
    "IiuProgram",
    "InstructionInjector",
    "TransferEvent",
    "TransferNetwork",
    "VACore",
    "alloc_vacore",
    "build_vacore",
]
