"""Shared merge fixtures used across the test suite."""

from mergeweave.classify import Prediction, PredictionSource, unit_mass
from mergeweave.labels import ResolutionLabel

FIG1_BASE = "var x = max(y, 10)\n"
FIG1_LEFT = "let x = max(y, 11)\n"
FIG1_RIGHT = "var x = max(y, 11, z)\n"
FIG1_RESOLVED = "let x = max(y, 11, z)\n"

FIG1_CONFLICTED = (
    "<<<<<<< A.js\n"
    "let x = max(y, 11)\n"
    "||||||| O.js\n"
    "var x = max(y, 10)\n"
    "=======\n"
    "var x = max(y, 11, z)\n"
    ">>>>>>> B.js\n"
)

# Multi-chunk merge: one side wraps the shared body in a callback, the
# other wraps it in an if/else; the user resolution nests both.  Produces
# two token-level conflicts resolved by ConcatAB then ConcatBA.
APPENDIX_BASE = """\
generate: function(scope) {
    var self = this;
    buffer.write("[");
    codegenUtils.writeToBufferWithDelimiter(self.items, ",",
                                            buffer, scope);
    return buffer.write("]");
}
"""

APPENDIX_LEFT = """\
generate: function(scope) {
    var self = this;
    return self.generateIntoBuffer(function(buffer) {
        buffer.write("[");
        codegenUtils.writeToBufferWithDelimiter(self.items, ",",
                                                buffer, scope);
        return buffer.write("]");
    });
}
"""

APPENDIX_RIGHT = """\
generate: function(scope) {
    var self = this;
    var splatArguments;
    splatArguments = terms.splatArguments(self.items);
    if (splatArguments) {
        return splatArguments.generateJavaScript(buffer, scope);
    } else {
        buffer.write("[");
        codegenUtils.writeToBufferWithDelimiter(self.items, ",",
                                                buffer, scope);
        return buffer.write("]");
    }
}
"""

APPENDIX_RESOLVED = """\
generate: function(scope) {
    var self = this;
    return self.generateIntoBuffer(function(buffer) {
        var splatArguments;
        splatArguments = terms.splatArguments(self.items);
        if (splatArguments) {
            return splatArguments.generateJavaScript(buffer, scope);
        } else {
            buffer.write("[");
            codegenUtils.writeToBufferWithDelimiter(self.items, ",",
                                                    buffer, scope);
            return buffer.write("]");
        }
    });
}
"""


class SequenceOracle:
    """Unit-mass classifier replaying a fixed sequence of labels."""

    def __init__(self, labels):
        self.labels = [ResolutionLabel(lab) for lab in labels]
        self.calls = 0
        self.inputs = []

    def predict(self, mi):
        self.inputs.append(mi)
        label = self.labels[self.calls % len(self.labels)]
        self.calls += 1
        return Prediction(unit_mass(label), PredictionSource.FIXED)

    def predict_batch(self, inputs):
        return [self.predict(mi) for mi in inputs]
