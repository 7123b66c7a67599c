import logging

logger = logging.getLogger("darth_pum")
