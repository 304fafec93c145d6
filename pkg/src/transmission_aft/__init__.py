from dotenv import load_dotenv

load_dotenv()


# Lazy loading of TransmissionStudySystem
def __getattr__(name):
    if name == "TransmissionStudySystem":
        from .system import TransmissionStudySystem

        return TransmissionStudySystem
    raise AttributeError(f"module '{__name__}' has no attribute '{name}'")


__all__ = ["TransmissionStudySystem"]
