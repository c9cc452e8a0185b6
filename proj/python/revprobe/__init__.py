"""Python access to the revprobe harness."""
import json

try:
    from . import _revprobe
except ImportError:  # extension built out of tree
    import _revprobe

RevprobeError = _revprobe.RevprobeError
__version__ = _revprobe.__version__

auc = _revprobe.auc
extract_answer = _revprobe.extract_answer
is_match = _revprobe.is_match
load_concepts = _revprobe.load_concepts
max_weight_assignment = _revprobe.max_weight_assignment
nl_translate = _revprobe.nl_translate
normalize = _revprobe.normalize
pearson = _revprobe.pearson
permute_words = _revprobe.permute_words
score_max_answers = _revprobe.score_max_answers
spearman = _revprobe.spearman
verify_backend = _revprobe.verify_backend


def probe_oracle(concepts, **kwargs):
    """Probe records from the oracle backend as a list of dicts."""
    text = _revprobe.probe_oracle(str(concepts), **kwargs)
    return [json.loads(line) for line in text.splitlines() if line]


def run(config):
    """Execute a run config file and return its manifest."""
    return json.loads(_revprobe.run(str(config)))
