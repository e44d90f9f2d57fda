# gearsim/__main__.py
from gearsim.main import app

app(prog_name="gearsim")
